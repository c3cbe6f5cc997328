#ifndef KST_BENCH_WORKLOAD_HPP
#define KST_BENCH_WORKLOAD_HPP

/// \file
/// Benchmark workload description.
///
/// An experiment name such as "5i-5d-40r-size100" gives the insert, delete
/// and range-query percentages (the rest are finds) and the range size.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kst/node.hpp"

namespace kst::bench {

struct WorkloadSpec {
  double insert_pct = 5;
  double delete_pct = 5;
  double rq_pct = 40;
  std::uint64_t range_size = 100;
  /// Keys are drawn from [key_lo, key_hi).
  Key key_lo = 0;
  Key key_hi = 1'000'000;
  std::size_t threads = 1;
  double duration_s = 10;
  double warmup_s = 2;
  std::size_t k = 16;
  std::size_t trials = 3;
  std::uint64_t seed = 1;
  /// Range queries copy keys out instead of returning leaf references.
  bool rq_copy_keys = true;
  /// When nonzero, each thread runs exactly this many operations instead of
  /// running for duration_s, and the warm-up is skipped.
  std::uint64_t ops_per_thread = 0;

  [[nodiscard]] std::uint64_t key_space() const noexcept {
    return static_cast<std::uint64_t>(key_hi - key_lo);
  }
  /// "5i-5d-40r-size100" style name of the mix.
  [[nodiscard]] std::string experiment() const;
  /// Throws ConfigError on an invalid combination.
  void validate() const;
};

struct Experiment {
  double insert_pct = 0;
  double delete_pct = 0;
  double rq_pct = 0;
  std::uint64_t range_size = 1;
};

/// Parses "xi-yd-zr-sizeS". Returns nullopt on malformed input.
[[nodiscard]] std::optional<Experiment> parse_experiment(std::string_view name);

void apply(WorkloadSpec& spec, const Experiment& e);

/// The four standard experiments.
[[nodiscard]] const std::vector<std::string>& reference_experiments();

/// Desk-scale preset "desk:<experiment>": keys [0, 10^4), 1 s trials, 3
/// trials. Returns nullopt for an unknown preset name.
[[nodiscard]] std::optional<WorkloadSpec> preset(std::string_view name);

}  // namespace kst::bench

#endif  // KST_BENCH_WORKLOAD_HPP
