#include "kst/check/scheduler.hpp"

#include <boost/context/fiber.hpp>
#include <boost/context/pooled_fixedsize_stack.hpp>

#include <charconv>
#include <exception>
#include <sstream>
#include <stdexcept>

namespace kst::check {

namespace ctx = boost::context;

class StackPool {
 public:
  ctx::pooled_fixedsize_stack alloc{256 * 1024};
};

struct CooperativeScheduler::Thread {
  ctx::fiber fiber;  // the suspended body, seen from the scheduler
  ctx::fiber back;   // the suspended scheduler, seen from the body
  ThreadView view;
  std::exception_ptr error;
};

CooperativeScheduler::CooperativeScheduler()
    : stacks_{std::make_unique<StackPool>()} {}

CooperativeScheduler::~CooperativeScheduler() {
  // Unwind before the stack pool goes away.
  threads_.clear();
}

void CooperativeScheduler::resume(ThreadId t) {
  running_ = t;
  Thread& th = *threads_[t];
  ++th.view.resumes;
  th.fiber = std::move(th.fiber).resume();
}

void CooperativeScheduler::yield(Failpoint point) {
  Thread& th = *threads_[running_];
  th.view.waiting_at = point;
  th.back = std::move(th.back).resume();
}

ExecutionOutcome CooperativeScheduler::run(std::vector<Body> bodies,
                                           Chooser& chooser,
                                           const ExecutionLimits& limits) {
  threads_.clear();
  const auto n = static_cast<ThreadId>(bodies.size());
  for (ThreadId t = 0; t < n; ++t) {
    auto th = std::make_unique<Thread>();
    Thread* raw = th.get();
    raw->fiber = ctx::fiber{
        std::allocator_arg, stacks_->alloc,
        [raw, body = std::move(bodies[t])](ctx::fiber&& back) mutable {
          raw->back = std::move(back);
          try {
            body();
          } catch (const ctx::detail::forced_unwind&) {
            throw;
          } catch (...) {
            raw->error = std::current_exception();
          }
          raw->view.finished = true;
          return std::move(raw->back);
        }};
    threads_.push_back(std::move(th));
  }

  ExecutionOutcome out;
  for (ThreadId t = 0; t < n; ++t) resume(t);

  std::vector<ThreadView> views(n);
  std::vector<Option> options;
  std::optional<ThreadId> last;
  auto runnable = [&](ThreadId t) {
    return !threads_[t]->view.finished && !threads_[t]->view.halted;
  };
  for (;;) {
    std::size_t live = 0;
    for (ThreadId t = 0; t < n; ++t) {
      views[t] = threads_[t]->view;
      if (runnable(t)) ++live;
    }
    if (live == 0) break;
    if (out.steps >= limits.step_budget) {
      out.budget_exceeded = true;
      break;
    }

    const std::optional<ThreadId> cur =
        last && runnable(*last) ? last : std::nullopt;
    const bool may_preempt =
        !limits.preemption_bound || out.preemptions < *limits.preemption_bound;
    options.clear();
    if (cur) options.push_back({*cur, false});
    for (ThreadId t = 0; t < n; ++t)
      if (runnable(t) && t != cur && (!cur || may_preempt))
        options.push_back({t, false});
    if (!out.halted && live >= 2 && (limits.allow_halt || limits.allow_halt_any)) {
      for (ThreadId t = 0; t < n; ++t) {
        if (!runnable(t)) continue;
        const bool fresh = t == cur || threads_[t]->view.resumes == 1;
        if (limits.allow_halt_any || fresh) options.push_back({t, true});
      }
    }

    const ChoicePoint cp{options, views, cur, out.steps};
    const Option pick = chooser.choose(cp);
    out.schedule.steps.push_back(
        {pick.thread, threads_[pick.thread]->view.waiting_at, pick.halt});
    if (pick.halt) {
      threads_[pick.thread]->view.halted = true;
      out.halted = pick.thread;
      continue;
    }
    if (cur && pick.thread != *cur) ++out.preemptions;
    last = pick.thread;
    ++out.steps;
    resume(pick.thread);
  }

  for (ThreadId t = 0; t < n; ++t) {
    const auto& v = threads_[t]->view;
    if (!v.finished && !v.halted) out.unfinished.push_back(t);
  }
  std::exception_ptr error;
  for (ThreadId t = 0; t < n; ++t) {
    running_ = t;
    if (!threads_[t]->view.finished) threads_[t]->fiber = ctx::fiber{};
    if (!error) error = threads_[t]->error;
  }
  threads_.clear();
  if (error) std::rethrow_exception(error);
  return out;
}

Option DfsChooser::choose(const ChoicePoint& cp) {
  if (cp.options.size() == 1) return cp.options[0];
  if (cursor_ < frames_.size()) {
    Frame& f = frames_[cursor_++];
    if (!std::equal(f.options.begin(), f.options.end(), cp.options.begin(),
                    cp.options.end()))
      throw std::logic_error{"execution is not deterministic under replay"};
    return f.options[f.index];
  }
  frames_.push_back({{cp.options.begin(), cp.options.end()}, 0});
  ++cursor_;
  return cp.options[0];
}

bool DfsChooser::advance() {
  cursor_ = 0;
  while (!frames_.empty() &&
         frames_.back().index + 1 >= frames_.back().options.size())
    frames_.pop_back();
  if (frames_.empty()) return false;
  ++frames_.back().index;
  return true;
}

Option RandomChooser::choose(const ChoicePoint& cp) {
  std::uniform_int_distribution<std::size_t> pick(0, cp.options.size() - 1);
  return cp.options[pick(rng_)];
}

Option ReplayChooser::choose(const ChoicePoint& cp) {
  if (next_ < schedule_.steps.size()) {
    const Step& s = schedule_.steps[next_++];
    const Option want{s.thread, s.halt};
    for (const Option& o : cp.options)
      if (o == want) return o;
    faithful_ = false;
  }
  return cp.options[0];
}

Option ScriptChooser::choose(const ChoicePoint& cp) {
  auto offered = [&](Option o) {
    for (const Option& x : cp.options)
      if (x == o) return true;
    return false;
  };
  while (next_ < script_.size()) {
    const Directive& d = script_[next_];
    const ThreadView& v = cp.threads[d.thread];
    if (v.finished || v.halted) {
      ++next_;
      started_ = false;
      continue;
    }
    if (d.halt) {
      ++next_;
      started_ = false;
      if (offered({d.thread, true})) return {d.thread, true};
      continue;
    }
    if (d.until) {
      // Count an arrival at the target each time the thread stops there.
      if (v.waiting_at == *d.until && (!started_ || cp.current == d.thread))
        ++seen_;
      if (!started_) started_ = true;
      if (seen_ >= d.occurrence) {
        ++next_;
        started_ = false;
        seen_ = 0;
        continue;
      }
    }
    if (offered({d.thread, false})) return {d.thread, false};
    ++next_;
    started_ = false;
  }
  for (const Option& o : cp.options)
    if (!o.halt) return o;
  return cp.options[0];
}

std::optional<Failpoint> parse_failpoint(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kFailpointCount; ++i) {
    const auto f = static_cast<Failpoint>(i);
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

std::string to_text(const Schedule& s) {
  std::string out;
  if (s.seed) out += "# seed " + std::to_string(*s.seed) + "\n";
  for (const Step& step : s.steps) {
    if (step.halt) out += "halt ";
    out += "t" + std::to_string(step.thread) + " ";
    out += to_string(step.point);
    out += '\n';
  }
  return out;
}

std::optional<Schedule> parse_schedule(std::string_view text,
                                       std::string* error) {
  Schedule s;
  std::istringstream in{std::string{text}};
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const char* what) -> std::optional<Schedule> {
    if (error != nullptr)
      *error = "line " + std::to_string(lineno) + ": " + what + ": " + line;
    return std::nullopt;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream words{line};
    std::string a, b, c;
    words >> a;
    if (a == "#") {
      if (words >> b >> c && b == "seed") {
        std::uint64_t seed;
        const auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), seed);
        if (ec != std::errc{} || p != c.data() + c.size()) return fail("bad seed");
        s.seed = seed;
      }
      continue;
    }
    Step step;
    if (a == "halt") {
      step.halt = true;
      if (!(words >> a)) return fail("missing thread");
    }
    if (!(words >> b)) return fail("missing failpoint");
    if (a.size() < 2 || a[0] != 't') return fail("bad thread");
    const auto [p, ec] =
        std::from_chars(a.data() + 1, a.data() + a.size(), step.thread);
    if (ec != std::errc{} || p != a.data() + a.size()) return fail("bad thread");
    const auto fp = parse_failpoint(b);
    if (!fp) return fail("unknown failpoint");
    step.point = *fp;
    s.steps.push_back(step);
  }
  return s;
}

}  // namespace kst::check
