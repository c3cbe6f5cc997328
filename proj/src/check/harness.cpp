#include "kst/check/harness.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "kst/check/structure.hpp"
#include "kst/kary_tree.hpp"

namespace kst::check {

namespace {

struct RangeAttemptCap {};

class Context;

struct HarnessHooks {
  Context* ctx = nullptr;

  void yield(Failpoint f);
  [[nodiscard]] bool omits(Mutation m) const noexcept;
  [[nodiscard]] RangeValidation validation() const noexcept;
  void child_cas_succeeded(ChildCas kind, const Internal* parent,
                           std::size_t index, const Node* removed,
                           const Node* inserted, const Descriptor* owner);
  void range_phase(RangePhase phase, std::size_t attempt);
  void range_push(const Node*) noexcept {}
  void retired(const void* p);
};

using HarnessTree = BasicTree<HarnessHooks>;

struct ThreadState {
  std::size_t op_index = 0;
  std::optional<std::size_t> record;
  std::vector<Key> collect_snapshot;
  std::optional<std::vector<Key>> validate_snapshot;
  std::vector<Key> lin_snapshot;
};

class Context {
 public:
  Context(const Mix& mix, const HarnessConfig& cfg, ExecutionReport& report)
      : mix_{mix}, cfg_{cfg}, report_{report}, threads_(mix.threads.size()) {
    report_.history.initial = mix.initial;
  }

  void attach(CooperativeScheduler* s, const Internal* root) {
    sched_ = s;
    root_ = root;
  }
  void activate() { active_ = true; }

  void yield(Failpoint f) {
    if (!active_) return;
    sched_->yield(f);
    if (f == Failpoint::op_begin) on_invoke(sched_->running());
  }

  [[nodiscard]] bool omits(Mutation m) const noexcept {
    return cfg_.mutation == m;
  }
  [[nodiscard]] RangeValidation validation() const noexcept {
    return cfg_.validation;
  }

  void on_invoke(ThreadId t) {
    ThreadState& st = threads_[t];
    OpRecord r;
    r.thread = t;
    r.op = mix_.threads[t][st.op_index];
    r.invoke = ++tick_;
    st.record = report_.history.records.size();
    report_.history.records.push_back(std::move(r));
  }

  void on_response(ThreadId t, OpResult result) {
    ThreadState& st = threads_[t];
    OpRecord& r = report_.history.records[*st.record];
    if (r.op.kind == OpKind::range) {
      std::vector<Key> expected;
      for (const Key k : st.lin_snapshot)
        if (r.op.key <= k && k <= r.op.hi) expected.push_back(k);
      if (expected != result.keys) {
        ++report_.snapshot_mismatches;
        OpResult want;
        want.keys = expected;
        fail("range snapshot mismatch: " + to_string(r.op) + " returned " +
             to_string(OpKind::range, result) + ", linearization-point state has " +
             to_string(OpKind::range, want));
      }
    }
    r.result = std::move(result);
    r.response = ++tick_;
    st.record.reset();
    ++st.op_index;
  }

  void on_child_cas(ChildCas kind, const Internal* parent, const Node* removed,
                    const Node* inserted, const Descriptor* owner) {
    if (!active_) return;
    const char* name = kind == ChildCas::rchild ? "Rchild" : "Pchild";
    if (parent->pending().load() != owner) {
      ++report_.protection_violations;
      fail(std::string{name} + " CAS while its descriptor was not installed");
    }
    if (kind == ChildCas::rchild) {
      if (!as_leaf(removed)->tagged()) {
        ++report_.tag_violations;
        fail("Rchild CAS unlinked an untagged leaf");
      }
      return;
    }
    const Internal* p = as_internal(removed);
    const Descriptor* pp = p->pending().load();
    if (pp->kind != DescriptorKind::mark ||
        static_cast<const Mark*>(pp)->flag != owner) {
      ++report_.protection_violations;
      fail("Pchild CAS removed a parent not marked by its descriptor");
    }
    for (std::size_t i = 0; i < p->arity(); ++i) {
      const Node* u = p->child(i).load();
      if (u == inserted) continue;
      if (!u->is_leaf() || !as_leaf(u)->tagged()) {
        ++report_.tag_violations;
        fail("Pchild CAS unlinked an untagged child");
      }
    }
  }

  void on_range_phase(RangePhase phase, std::size_t attempt) {
    if (!active_) return;
    ThreadState& st = threads_[sched_->running()];
    switch (phase) {
      case RangePhase::collect_begin:
        report_.max_range_attempts =
            std::max(report_.max_range_attempts, attempt);
        if (cfg_.range_attempt_cap != 0 && attempt > cfg_.range_attempt_cap) {
          report_.range_attempt_cap_hit = true;
          throw RangeAttemptCap{};
        }
        st.collect_snapshot = collect_keys(root_);
        st.validate_snapshot.reset();
        break;
      case RangePhase::validate_begin:
        st.validate_snapshot = collect_keys(root_);
        break;
      case RangePhase::done:
        st.lin_snapshot = attempt == 1 && st.validate_snapshot
                              ? *st.validate_snapshot
                              : st.collect_snapshot;
        break;
    }
  }

  void on_retired(const void* p) {
    if (!active_) return;
    if (reachable_objects(root_).contains(p)) {
      ++report_.retire_violations;
      fail("retired an object that is still reachable");
    }
  }

  void fail(std::string what) {
    if (report_.failures.size() < 16) report_.failures.push_back(std::move(what));
  }

 private:
  const Mix& mix_;
  const HarnessConfig& cfg_;
  ExecutionReport& report_;
  std::vector<ThreadState> threads_;
  CooperativeScheduler* sched_ = nullptr;
  const Internal* root_ = nullptr;
  bool active_ = false;
  std::uint64_t tick_ = 0;
};

void HarnessHooks::yield(Failpoint f) { ctx->yield(f); }
bool HarnessHooks::omits(Mutation m) const noexcept { return ctx->omits(m); }
RangeValidation HarnessHooks::validation() const noexcept {
  return ctx->validation();
}
void HarnessHooks::child_cas_succeeded(ChildCas kind, const Internal* parent,
                                       std::size_t, const Node* removed,
                                       const Node* inserted,
                                       const Descriptor* owner) {
  ctx->on_child_cas(kind, parent, removed, inserted, owner);
}
void HarnessHooks::range_phase(RangePhase phase, std::size_t attempt) {
  ctx->on_range_phase(phase, attempt);
}
void HarnessHooks::retired(const void* p) { ctx->on_retired(p); }

OpResult execute(HarnessTree& tree, const Op& op) {
  OpResult r;
  switch (op.kind) {
    case OpKind::insert: r.flag = tree.insert(op.key); break;
    case OpKind::erase: r.flag = tree.erase(op.key); break;
    case OpKind::find: r.flag = tree.contains(op.key); break;
    case OpKind::range: r.keys = tree.range_keys(op.key, op.hi); break;
  }
  return r;
}

// One scheduler per OS thread; its stack pool outlives executions.
CooperativeScheduler& scheduler() {
  thread_local CooperativeScheduler s;
  return s;
}

}  // namespace

std::string describe(const Mix& mix) {
  std::string s = mix.name + " k=" + std::to_string(mix.arity) + " initial={";
  bool first = true;
  for (const Key k : mix.initial) {
    if (!first) s += ',';
    s += std::to_string(k);
    first = false;
  }
  s += "}";
  for (std::size_t t = 0; t < mix.threads.size(); ++t) {
    s += " t" + std::to_string(t) + ":";
    for (const Op& op : mix.threads[t]) s += " " + to_string(op);
  }
  return s;
}

std::string ExecutionReport::describe() const {
  std::string s;
  for (const auto& f : failures) s += "failure: " + f + "\n";
  s += "schedule:\n" + to_text(schedule);
  s += "history:\n" + to_text(history);
  if (lin.verdict != Verdict::linearizable) s += lin.describe(history);
  return s;
}

ExecutionReport run_execution(const Mix& mix, const HarnessConfig& cfg,
                              Chooser& chooser) {
  ExecutionReport report;
  Context ctx{mix, cfg, report};
  EpochDomain domain{cfg.reclaim, 1, true};
  {
    HarnessTree tree{mix.arity, domain, HarnessHooks{&ctx}};
    CooperativeScheduler& sched = scheduler();
    ctx.attach(&sched, tree.root());
    for (const Key k : mix.initial) tree.insert(k);
    ctx.activate();

    std::vector<CooperativeScheduler::Body> bodies;
    for (std::size_t t = 0; t < mix.threads.size(); ++t) {
      bodies.emplace_back([&, t] {
        try {
          for (const Op& op : mix.threads[t])
            ctx.on_response(static_cast<ThreadId>(t), execute(tree, op));
        } catch (const RangeAttemptCap&) {
          // The query stays pending in the history.
        } catch (const std::exception& e) {
          ++report.errors;
          ctx.fail(std::string{"exception: "} + e.what());
        }
      });
    }

    ExecutionLimits limits;
    limits.preemption_bound = cfg.preemption_bound;
    limits.allow_halt = cfg.allow_halt;
    limits.allow_halt_any = cfg.allow_halt_any;
    limits.step_budget = cfg.steps_per_thread * std::max<std::size_t>(1, mix.threads.size());
    report.outcome = sched.run(std::move(bodies), chooser, limits);
    report.schedule = report.outcome.schedule;

    if (report.outcome.budget_exceeded && !report.range_attempt_cap_hit) {
      report.hang = true;
      ctx.fail("threads still running after " +
               std::to_string(report.outcome.steps) + " steps");
    }

    const auto keys = collect_keys(tree.root());
    report.history.final_keys = std::set<Key>(keys.begin(), keys.end());
    report.lin = check_linearizable(report.history, cfg.lin_budget);
    if (report.lin.verdict != Verdict::linearizable)
      ctx.fail(std::string{"history "} + std::string{to_string(report.lin.verdict)});

    StructureOptions opts;
    opts.require_clean = !report.outcome.halted && !report.outcome.budget_exceeded;
    const auto st = check_structure(tree.root(), opts);
    if (!st.ok()) {
      report.structure_ok = false;
      ctx.fail("structure: " + st.describe());
    }
  }
  return report;
}

void EnumerationSummary::add(const ExecutionReport& r, const Mix& mix) {
  ++schedules;
  max_steps = std::max(max_steps, r.outcome.steps);
  if (r.ok()) return;
  ++failing;
  if (r.lin.verdict == Verdict::not_linearizable) ++not_linearizable;
  if (r.lin.verdict == Verdict::budget_exhausted) ++lin_budget_exhausted;
  if (r.snapshot_mismatches != 0) ++snapshot_mismatch;
  if (r.tag_violations != 0) ++tag_violation;
  if (r.protection_violations != 0) ++protection_violation;
  if (r.retire_violations != 0) ++retire_violation;
  if (r.hang) ++hang;
  if (!r.structure_ok) ++structure;
  if (r.errors != 0) ++errors;
  if (!first_failure) {
    first_failure = r;
    first_failure_mix = kst::check::describe(mix);
  }
}

void EnumerationSummary::merge(const EnumerationSummary& o) {
  schedules += o.schedules;
  failing += o.failing;
  not_linearizable += o.not_linearizable;
  lin_budget_exhausted += o.lin_budget_exhausted;
  snapshot_mismatch += o.snapshot_mismatch;
  tag_violation += o.tag_violation;
  protection_violation += o.protection_violation;
  retire_violation += o.retire_violation;
  hang += o.hang;
  structure += o.structure;
  errors += o.errors;
  max_steps = std::max(max_steps, o.max_steps);
  complete = complete && o.complete;
  if (!first_failure && o.first_failure) {
    first_failure = o.first_failure;
    first_failure_mix = o.first_failure_mix;
  }
}

std::string EnumerationSummary::describe() const {
  std::ostringstream s;
  s << schedules << " schedules, " << failing << " failing"
    << " (not linearizable " << not_linearizable << ", checker budget "
    << lin_budget_exhausted << ", snapshot " << snapshot_mismatch << ", tag "
    << tag_violation << ", protection " << protection_violation
    << ", retire " << retire_violation << ", hang " << hang << ", structure "
    << structure << ", errors " << errors << ")"
    << (complete ? "" : ", schedule cap reached");
  if (first_failure)
    s << "\nfirst failure in " << first_failure_mix << "\n"
      << first_failure->describe();
  return s.str();
}

EnumerationSummary enumerate_mix(const Mix& mix, const HarnessConfig& cfg,
                                 std::size_t max_schedules,
                                 bool stop_on_failure) {
  EnumerationSummary sum;
  DfsChooser dfs;
  for (;;) {
    const ExecutionReport r = run_execution(mix, cfg, dfs);
    sum.add(r, mix);
    if (stop_on_failure && !r.ok()) break;
    if (!dfs.advance()) break;
    if (sum.schedules >= max_schedules) {
      sum.complete = false;
      break;
    }
  }
  return sum;
}

EnumerationSummary random_schedules(const Mix& mix, const HarnessConfig& cfg,
                                    std::uint64_t seed, std::size_t runs) {
  EnumerationSummary sum;
  for (std::size_t i = 0; i < runs; ++i) {
    RandomChooser chooser{seed + i};
    ExecutionReport r = run_execution(mix, cfg, chooser);
    r.schedule.seed = seed + i;
    sum.add(r, mix);
  }
  return sum;
}

std::vector<Mix> desk_mix_family(std::uint64_t seed, std::size_t random_mixes) {
  auto ins = [](Key k) { return Op{OpKind::insert, k, 0}; };
  auto del = [](Key k) { return Op{OpKind::erase, k, 0}; };
  auto find = [](Key k) { return Op{OpKind::find, k, 0}; };
  auto range = [](Key lo, Key hi) { return Op{OpKind::range, lo, hi}; };

  std::vector<Mix> mixes;
  for (const std::size_t k : {2u, 4u}) {
    const std::string ks = "k" + std::to_string(k) + "-";
    // A query collects leaves while an insert tags one of them.
    mixes.push_back({ks + "tag-during-collect", k, {1, 2}, {{ins(3)}, {range(1, 4)}}});
    // Two inserts in sequence on both sides of a query's traversal.
    mixes.push_back({ks + "ordered-inserts", k, {2, 3}, {{ins(4), ins(1)}, {range(1, 4)}}});
    mixes.push_back({ks + "ordered-updates", k, {1, 2, 3}, {{del(3), ins(4), del(1)}, {range(1, 4)}}});
    // Pruning races.
    mixes.push_back({ks + "prune-vs-insert", k, {1, 2}, {{del(1)}, {ins(3)}, {range(1, 4)}}});
    mixes.push_back({ks + "prune-both", k, {1, 2}, {{del(1)}, {del(2)}}});
    mixes.push_back({ks + "prune-chain", k, {1, 2, 3, 4}, {{del(1), del(2), del(3)}, {range(1, 4)}}});
    mixes.push_back({ks + "prune-siblings", k, {1, 2, 3}, {{del(2)}, {del(3)}, {range(1, 4)}}});
    mixes.push_back({ks + "same-key", k, {}, {{ins(2), del(2)}, {ins(2), find(2)}}});
  }

  std::mt19937_64 rng{seed};
  std::uniform_int_distribution<Key> key(1, 4);
  std::uniform_int_distribution<int> pct(0, 99);
  for (std::size_t i = 0; i < random_mixes; ++i) {
    Mix m;
    m.arity = i % 2 == 0 ? 2 : 4;
    m.name = "random-" + std::to_string(i);
    for (Key k = 1; k <= 4; ++k)
      if (pct(rng) < 50) m.initial.insert(k);
    const std::size_t threads = 2 + rng() % 2;
    for (std::size_t t = 0; t < threads; ++t) {
      std::vector<Op> ops;
      const std::size_t n = 1 + rng() % 3;
      for (std::size_t j = 0; j < n; ++j) {
        const int p = pct(rng);
        const Key a = key(rng);
        if (p < 35)
          ops.push_back(ins(a));
        else if (p < 70)
          ops.push_back(del(a));
        else if (p < 80)
          ops.push_back(find(a));
        else
          ops.push_back(range(std::min(a, key(rng)), std::max(a, Key{4})));
      }
      m.threads.push_back(std::move(ops));
    }
    mixes.push_back(std::move(m));
  }
  return mixes;
}

}  // namespace kst::check
