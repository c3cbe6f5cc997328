#include <doctest.h>

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "kst/check/scheduler.hpp"

using namespace kst;
using namespace kst::check;

namespace {

std::vector<CooperativeScheduler::Body> yielding_bodies(
    CooperativeScheduler& s, std::vector<std::size_t> yields,
    std::vector<std::string>* trace = nullptr) {
  std::vector<CooperativeScheduler::Body> bodies;
  for (std::size_t t = 0; t < yields.size(); ++t) {
    bodies.emplace_back([&s, t, n = yields[t], trace] {
      for (std::size_t i = 0; i < n; ++i) {
        s.yield(Failpoint::read_child);
        if (trace) trace->push_back("t" + std::to_string(t) + "." + std::to_string(i));
      }
    });
  }
  return bodies;
}

// Counts interleavings of threads with `steps[t]` steps each in which at most
// `bound` switches leave a thread that could still run.
std::size_t brute_force_count(std::vector<std::size_t> steps, int last,
                              std::size_t bound) {
  bool any = false;
  std::size_t total = 0;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    if (steps[t] == 0) continue;
    any = true;
    const bool preempts = last >= 0 && static_cast<int>(t) != last &&
                          steps[static_cast<std::size_t>(last)] != 0;
    if (preempts && bound == 0) continue;
    auto next = steps;
    --next[t];
    total += brute_force_count(next, static_cast<int>(t), bound - (preempts ? 1 : 0));
  }
  return any ? total : 1;
}

std::size_t dfs_count(std::vector<std::size_t> yields, ExecutionLimits limits) {
  CooperativeScheduler s;
  DfsChooser dfs;
  std::size_t n = 0;
  std::set<std::string> distinct;
  do {
    const auto out = s.run(yielding_bodies(s, yields), dfs, limits);
    distinct.insert(to_text(out.schedule));
    ++n;
  } while (dfs.advance());
  CHECK(distinct.size() == n);
  return n;
}

}  // namespace

TEST_CASE("unbounded enumeration of two threads of six steps gives 924 schedules") {
  CHECK(dfs_count({6, 6}, {}) == 924);
}

TEST_CASE("preemption-bounded enumeration matches a brute-force count") {
  for (std::size_t bound = 0; bound <= 3; ++bound) {
    ExecutionLimits limits;
    limits.preemption_bound = bound;
    CAPTURE(bound);
    CHECK(dfs_count({3, 3}, limits) == brute_force_count({3, 3}, -1, bound));
    CHECK(dfs_count({2, 3, 2}, limits) == brute_force_count({2, 3, 2}, -1, bound));
  }
  CHECK(brute_force_count({6, 6}, -1, 100) == 924);
}

TEST_CASE("replaying a recorded schedule reproduces the interleaving") {
  CooperativeScheduler s;
  std::vector<std::string> first, second;
  RandomChooser random{17};
  const auto out = s.run(yielding_bodies(s, {4, 3, 5}, &first), random, {});
  const auto parsed = parse_schedule(to_text(out.schedule));
  REQUIRE(parsed);
  CHECK(*parsed == out.schedule);
  ReplayChooser replay{*parsed};
  const auto again = s.run(yielding_bodies(s, {4, 3, 5}, &second), replay, {});
  CHECK(replay.faithful());
  CHECK(first == second);
  CHECK(again.schedule == out.schedule);
}

TEST_CASE("a halted thread never resumes and is unwound") {
  CooperativeScheduler s;
  int unwound = 0;
  int done = 0;
  struct Sentinel {
    int* n;
    ~Sentinel() { ++*n; }
  };
  std::vector<CooperativeScheduler::Body> bodies;
  bodies.emplace_back([&] {
    Sentinel guard{&unwound};
    for (int i = 0; i < 3; ++i) s.yield(Failpoint::rflag_cas);
    ++done;
  });
  bodies.emplace_back([&] {
    for (int i = 0; i < 3; ++i) s.yield(Failpoint::read_child);
    ++done;
  });
  ExecutionLimits limits;
  limits.allow_halt_any = true;
  ScriptChooser script{{ScriptChooser::run_until(0, Failpoint::rflag_cas, 2),
                        ScriptChooser::halt(0), ScriptChooser::run_to_end(1)}};
  const auto out = s.run(std::move(bodies), script, limits);
  REQUIRE(out.halted);
  CHECK(*out.halted == 0);
  CHECK(done == 1);
  CHECK(unwound == 1);
  CHECK(out.unfinished.empty());
  CHECK(!out.budget_exceeded);
}

TEST_CASE("halt options are offered once per execution") {
  ExecutionLimits limits;
  limits.allow_halt_any = true;
  CooperativeScheduler s;
  DfsChooser dfs;
  std::size_t halted = 0, total = 0;
  do {
    const auto out = s.run(yielding_bodies(s, {1, 2}), dfs, limits);
    std::size_t halts = 0;
    for (const Step& st : out.schedule.steps) halts += st.halt ? 1 : 0;
    CHECK(halts <= 1);
    halted += halts;
    ++total;
  } while (dfs.advance());
  CHECK(halted > 0);
  CHECK(total - halted == 3);
}

TEST_CASE("the step budget abandons a spinning thread") {
  CooperativeScheduler s;
  std::vector<CooperativeScheduler::Body> bodies;
  bodies.emplace_back([&] {
    for (;;) s.yield(Failpoint::read_tag);
  });
  ExecutionLimits limits;
  limits.step_budget = 50;
  RandomChooser random{1};
  const auto out = s.run(std::move(bodies), random, limits);
  CHECK(out.budget_exceeded);
  CHECK(out.steps == 50);
  CHECK(out.unfinished == std::vector<ThreadId>{0});
}

TEST_CASE("body exceptions propagate after unwinding") {
  CooperativeScheduler s;
  std::vector<CooperativeScheduler::Body> bodies;
  bodies.emplace_back([&] {
    s.yield(Failpoint::op_begin);
    throw std::runtime_error{"boom"};
  });
  bodies.emplace_back([&] { s.yield(Failpoint::op_begin); });
  RandomChooser random{3};
  CHECK_THROWS_WITH(s.run(std::move(bodies), random, {}), "boom");
}

TEST_CASE("schedule text rejects malformed lines") {
  std::string error;
  CHECK_FALSE(parse_schedule("t0 nowhere\n", &error));
  CHECK(!error.empty());
  CHECK_FALSE(parse_schedule("x1 read_child\n"));
  const auto s = parse_schedule("# seed 9\nt1 read_child\nhalt t0 rchild_cas\n");
  REQUIRE(s);
  CHECK(s->seed == 9u);
  REQUIRE(s->steps.size() == 2);
  CHECK(s->steps[1] == Step{0, Failpoint::rchild_cas, true});
}
