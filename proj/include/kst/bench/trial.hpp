#ifndef KST_BENCH_TRIAL_HPP
#define KST_BENCH_TRIAL_HPP

/// \file
/// Prefill and timed trials over the tree or the locked baseline.

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "kst/bench/workload.hpp"

namespace kst::bench {

/// Ordered set under benchmark. Implementations are safe for concurrent use.
class BenchSet {
 public:
  struct RangeStats {
    std::size_t keys = 0;
    std::size_t attempts = 1;
  };

  virtual ~BenchSet() = default;
  virtual bool insert(Key key) = 0;
  virtual bool erase(Key key) = 0;
  virtual bool contains(Key key) = 0;
  /// Closed range [lo, hi]. `copy` copies the keys out; otherwise the keys
  /// are only counted through the returned references.
  virtual RangeStats range(Key lo, Key hi, bool copy) = 0;
  /// Quiescent only.
  [[nodiscard]] virtual std::vector<Key> keys() const = 0;
  /// Quiescent only. Empty when the structure is valid.
  [[nodiscard]] virtual std::string check() const = 0;
};

enum class Structure { kst, baseline };

[[nodiscard]] std::string_view to_string(Structure s) noexcept;
[[nodiscard]] std::unique_ptr<BenchSet> make_set(Structure s, std::size_t k);

/// Random inserts and deletes, each with probability 1/2, until the set
/// holds half the key space within tolerance/2, then returns its size.
/// Throws std::runtime_error when that does not happen within `op_budget`
/// operations (0 picks 100 times the key space).
std::size_t prefill(BenchSet& set, const WorkloadSpec& spec, std::mt19937_64& rng,
                    double tolerance = 0.05, std::uint64_t op_budget = 0);

/// Range queries by retries (attempts - 1): 1, 2-3, 4-7, 8+.
using RetryHistogram = std::array<std::uint64_t, 4>;

[[nodiscard]] std::size_t retry_bucket(std::size_t retries) noexcept;

struct TrialResult {
  Structure structure = Structure::kst;
  WorkloadSpec spec;
  std::string preset;
  std::size_t trial = 0;
  double duration_s = 0;
  std::uint64_t total_ops = 0;
  std::uint64_t inserts = 0;
  std::uint64_t deletes = 0;
  std::uint64_t finds = 0;
  std::uint64_t range_queries = 0;
  /// Inserts and deletes that changed the set.
  std::uint64_t mutations = 0;
  double throughput_ops_s = 0;
  RetryHistogram rq_retries{};
  std::uint64_t range_keys_total = 0;
  std::size_t initial_size = 0;
  std::size_t final_size = 0;
  /// Hash of the final contents, for comparing structures run on the same
  /// operation sequence.
  std::uint64_t final_fingerprint = 0;
  std::string structure_error;

  [[nodiscard]] double mean_range_size() const noexcept {
    return range_queries == 0 ? 0.0
                              : static_cast<double>(range_keys_total) /
                                    static_cast<double>(range_queries);
  }
  /// Expected range result size at half full: range_size / 2, limited by
  /// the key space.
  [[nodiscard]] double expected_range_size() const noexcept;
};

/// Runs trial number `trial` on a fresh, prefilled structure. With
/// `warm_up` set, an untimed mixed phase of spec.warmup_s precedes timing.
TrialResult run_trial(Structure structure, const WorkloadSpec& spec,
                      std::size_t trial, bool warm_up);

/// All trials of one (structure, spec); only the first is warmed up.
std::vector<TrialResult> run_trials(Structure structure, const WorkloadSpec& spec,
                                    const std::string& preset = {});

}  // namespace kst::bench

#endif  // KST_BENCH_TRIAL_HPP
