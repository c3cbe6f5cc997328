#include "kst/bench/trial.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "kst/check/structure.hpp"
#include "kst/kary_tree.hpp"

namespace kst::bench {

namespace {

class TreeSet final : public BenchSet {
 public:
  explicit TreeSet(std::size_t k) : tree_{k, domain_} {}

  bool insert(Key key) override { return tree_.insert(key); }
  bool erase(Key key) override { return tree_.erase(key); }
  bool contains(Key key) override { return tree_.contains(key); }
  RangeStats range(Key lo, Key hi, bool copy) override {
    const RangeResult r = tree_.range_query(lo, hi);
    RangeStats s;
    s.attempts = r.attempts();
    if (copy) {
      s.keys = r.keys().size();
    } else {
      for (const Leaf* leaf : r.leaves())
        for (const Key key : leaf->user_keys())
          if (lo <= key && key <= hi) ++s.keys;
    }
    return s;
  }
  std::vector<Key> keys() const override { return check::collect_keys(tree_); }
  std::string check() const override {
    const auto report = check::check_structure(tree_);
    return report.ok() ? std::string{} : report.describe();
  }

 private:
  EpochDomain domain_;
  Tree tree_;
};

class LockedSet final : public BenchSet {
 public:
  bool insert(Key key) override {
    std::lock_guard lock{mutex_};
    return keys_.insert(key).second;
  }
  bool erase(Key key) override {
    std::lock_guard lock{mutex_};
    return keys_.erase(key) != 0;
  }
  bool contains(Key key) override {
    std::lock_guard lock{mutex_};
    return keys_.contains(key);
  }
  RangeStats range(Key lo, Key hi, bool copy) override {
    std::lock_guard lock{mutex_};
    const auto first = keys_.lower_bound(lo);
    const auto last = keys_.upper_bound(hi);
    RangeStats s;
    if (copy) {
      const std::vector<Key> out(first, last);
      s.keys = out.size();
    } else {
      s.keys = static_cast<std::size_t>(std::distance(first, last));
    }
    return s;
  }
  std::vector<Key> keys() const override {
    std::lock_guard lock{mutex_};
    return {keys_.begin(), keys_.end()};
  }
  std::string check() const override { return {}; }

 private:
  mutable std::mutex mutex_;
  std::set<Key> keys_;
};

struct Counters {
  std::uint64_t inserts = 0;
  std::uint64_t deletes = 0;
  std::uint64_t finds = 0;
  std::uint64_t range_queries = 0;
  std::uint64_t mutations = 0;
  std::uint64_t range_keys = 0;
  RetryHistogram retries{};
};

enum class Phase : int { warm_up, timed, stop };

class Worker {
 public:
  Worker(BenchSet& set, const WorkloadSpec& spec, std::size_t trial, std::size_t tid)
      : set_{set},
        spec_{spec},
        key_{spec.key_lo, spec.key_hi - 1},
        start_{spec.key_lo,
               spec.key_hi - spec.key_lo > static_cast<Key>(spec.range_size)
                   ? spec.key_hi - static_cast<Key>(spec.range_size)
                   : spec.key_lo} {
    std::seed_seq seq{spec.seed, static_cast<std::uint64_t>(trial),
                      static_cast<std::uint64_t>(tid)};
    rng_.seed(seq);
  }

  void step(Counters& c) {
    const double p = pct_(rng_);
    if (p < spec_.insert_pct) {
      ++c.inserts;
      if (set_.insert(key_(rng_))) ++c.mutations;
    } else if (p < spec_.insert_pct + spec_.delete_pct) {
      ++c.deletes;
      if (set_.erase(key_(rng_))) ++c.mutations;
    } else if (p < spec_.insert_pct + spec_.delete_pct + spec_.rq_pct) {
      ++c.range_queries;
      const Key lo = start_(rng_);
      const Key hi = std::min(spec_.key_hi - 1, lo + static_cast<Key>(spec_.range_size) - 1);
      const auto s = set_.range(lo, hi, spec_.rq_copy_keys);
      c.range_keys += s.keys;
      if (s.attempts > 1) ++c.retries[retry_bucket(s.attempts - 1)];
    } else {
      ++c.finds;
      (void)set_.contains(key_(rng_));
    }
  }

 private:
  BenchSet& set_;
  const WorkloadSpec& spec_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> pct_{0.0, 100.0};
  std::uniform_int_distribution<Key> key_;
  std::uniform_int_distribution<Key> start_;
};

}  // namespace

std::string_view to_string(Structure s) noexcept {
  return s == Structure::kst ? "kst" : "baseline";
}

std::unique_ptr<BenchSet> make_set(Structure s, std::size_t k) {
  if (s == Structure::kst) return std::make_unique<TreeSet>(k);
  return std::make_unique<LockedSet>();
}

std::size_t prefill(BenchSet& set, const WorkloadSpec& spec, std::mt19937_64& rng,
                    double tolerance, std::uint64_t op_budget) {
  const std::uint64_t space = spec.key_space();
  if (op_budget == 0) op_budget = 100 * space;
  const double target = static_cast<double>(space) / 2;
  const double slack = target * tolerance / 2;
  std::uniform_int_distribution<Key> key{spec.key_lo, spec.key_hi - 1};
  std::bernoulli_distribution coin{0.5};
  double size = 0;
  for (std::uint64_t i = 0; i < op_budget; ++i) {
    if (coin(rng)) {
      if (set.insert(key(rng))) ++size;
    } else {
      if (set.erase(key(rng))) --size;
    }
    if (std::abs(size - target) <= slack) return static_cast<std::size_t>(size);
  }
  throw std::runtime_error{"prefill did not reach half full within " +
                           std::to_string(op_budget) + " operations"};
}

std::size_t retry_bucket(std::size_t retries) noexcept {
  if (retries <= 1) return 0;
  if (retries <= 3) return 1;
  if (retries <= 7) return 2;
  return 3;
}

double TrialResult::expected_range_size() const noexcept {
  const auto width = std::min<std::uint64_t>(spec.range_size, spec.key_space());
  return static_cast<double>(width) / 2;
}

TrialResult run_trial(Structure structure, const WorkloadSpec& spec,
                      std::size_t trial, bool warm_up) {
  spec.validate();
  TrialResult result;
  result.structure = structure;
  result.spec = spec;
  result.trial = trial;

  auto set = make_set(structure, spec.k);
  std::seed_seq seq{spec.seed, static_cast<std::uint64_t>(trial), ~std::uint64_t{0}};
  std::mt19937_64 rng{seq};
  result.initial_size = prefill(*set, spec, rng);

  const bool counted = spec.ops_per_thread != 0;
  std::atomic<Phase> phase{warm_up && !counted ? Phase::warm_up : Phase::timed};
  std::atomic<std::size_t> ready{0};
  std::atomic<bool> go{false};
  std::vector<Counters> counters(spec.threads);
  std::vector<std::thread> threads;
  threads.reserve(spec.threads);
  for (std::size_t t = 0; t < spec.threads; ++t) {
    threads.emplace_back([&, t] {
      Worker w{*set, spec, trial, t};
      Counters scratch;
      ready.fetch_add(1);
      while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
      if (counted) {
        for (std::uint64_t i = 0; i < spec.ops_per_thread; ++i) w.step(counters[t]);
        return;
      }
      for (;;) {
        const Phase p = phase.load(std::memory_order_relaxed);
        if (p == Phase::stop) break;
        w.step(p == Phase::timed ? counters[t] : scratch);
      }
    });
  }
  while (ready.load() != spec.threads) std::this_thread::yield();

  using Clock = std::chrono::steady_clock;
  go.store(true, std::memory_order_release);
  if (!counted && phase.load() == Phase::warm_up) {
    std::this_thread::sleep_for(std::chrono::duration<double>(spec.warmup_s));
    phase.store(Phase::timed);
  }
  const auto begin = Clock::now();
  if (!counted) {
    std::this_thread::sleep_for(std::chrono::duration<double>(spec.duration_s));
    phase.store(Phase::stop);
  }
  for (auto& th : threads) th.join();
  result.duration_s = std::chrono::duration<double>(Clock::now() - begin).count();

  for (const Counters& c : counters) {
    result.inserts += c.inserts;
    result.deletes += c.deletes;
    result.finds += c.finds;
    result.range_queries += c.range_queries;
    result.mutations += c.mutations;
    result.range_keys_total += c.range_keys;
    for (std::size_t i = 0; i < c.retries.size(); ++i)
      result.rq_retries[i] += c.retries[i];
  }
  result.total_ops = result.inserts + result.deletes + result.finds + result.range_queries;
  result.throughput_ops_s =
      result.duration_s > 0 ? static_cast<double>(result.total_ops) / result.duration_s : 0;
  const auto keys = set->keys();
  result.final_size = keys.size();
  std::uint64_t h = 14695981039346656037ull;  // FNV-1a over the key bytes
  for (const Key key : keys) {
    auto v = static_cast<std::uint64_t>(key);
    for (int i = 0; i < 8; ++i, v >>= 8) h = (h ^ (v & 0xff)) * 1099511628211ull;
  }
  result.final_fingerprint = h;
  result.structure_error = set->check();
  return result;
}

std::vector<TrialResult> run_trials(Structure structure, const WorkloadSpec& spec,
                                    const std::string& preset) {
  std::vector<TrialResult> out;
  for (std::size_t i = 0; i < spec.trials; ++i) {
    out.push_back(run_trial(structure, spec, i, i == 0));
    out.back().preset = preset;
  }
  return out;
}

}  // namespace kst::bench
