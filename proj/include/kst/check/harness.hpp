#ifndef KST_CHECK_HARNESS_HPP
#define KST_CHECK_HARNESS_HPP

/// \file
/// Deterministic concurrency harness for the tree.
///
/// A mix assigns a short list of operations to each of a few threads. Every
/// execution builds a fresh tree over the mix's initial keys, runs the
/// threads under the cooperative scheduler, records a history and checks:
///
///  - the history is linearizable, final contents included;
///  - each range query returned exactly the keys present at its
///    linearization step (start of the only validation phase, or start of the
///    last collect phase);
///  - every leaf unlinked by a child CAS was tagged at that moment, and the
///    CAS ran while its descriptor was installed;
///  - retired objects were unreachable when retired;
///  - runnable threads finished within the step budget;
///  - the final tree is structurally valid.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kst/check/history.hpp"
#include "kst/check/linearizability.hpp"
#include "kst/check/oracle.hpp"
#include "kst/check/scheduler.hpp"
#include "kst/hooks.hpp"
#include "kst/reclamation.hpp"

namespace kst::check {

struct Mix {
  std::string name;
  std::size_t arity = 4;
  std::set<Key> initial;
  std::vector<std::vector<Op>> threads;
};

[[nodiscard]] std::string describe(const Mix& mix);

struct HarnessConfig {
  std::optional<Mutation> mutation;
  RangeValidation validation = RangeValidation::tagged;
  ReclaimPolicy reclaim = ReclaimPolicy::eager;
  std::optional<std::size_t> preemption_bound = 2;
  bool allow_halt = false;
  bool allow_halt_any = false;
  /// Steps allowed per thread still running after a halt (or per thread
  /// when none is halted).
  std::size_t steps_per_thread = 100'000;
  /// Abort a range query after this many attempts; 0 disables.
  std::size_t range_attempt_cap = 0;
  std::size_t lin_budget = 1'000'000;
};

struct ExecutionReport {
  Schedule schedule;
  History history;
  ExecutionOutcome outcome;
  LinearizabilityResult lin;
  std::size_t snapshot_mismatches = 0;
  std::size_t tag_violations = 0;
  std::size_t protection_violations = 0;
  std::size_t retire_violations = 0;
  bool hang = false;
  bool structure_ok = true;
  std::size_t errors = 0;
  /// Largest attempt count of any range query, finished or not.
  std::size_t max_range_attempts = 0;
  bool range_attempt_cap_hit = false;
  std::vector<std::string> failures;

  [[nodiscard]] bool ok() const noexcept { return failures.empty(); }
  [[nodiscard]] std::string describe() const;
};

ExecutionReport run_execution(const Mix& mix, const HarnessConfig& cfg,
                              Chooser& chooser);

struct EnumerationSummary {
  std::size_t schedules = 0;
  std::size_t failing = 0;
  std::size_t not_linearizable = 0;
  std::size_t lin_budget_exhausted = 0;
  std::size_t snapshot_mismatch = 0;
  std::size_t tag_violation = 0;
  std::size_t protection_violation = 0;
  std::size_t retire_violation = 0;
  std::size_t hang = 0;
  std::size_t structure = 0;
  std::size_t errors = 0;
  std::size_t max_steps = 0;
  /// False when the schedule cap stopped the enumeration early.
  bool complete = true;
  std::optional<ExecutionReport> first_failure;
  std::string first_failure_mix;

  void add(const ExecutionReport& r, const Mix& mix);
  void merge(const EnumerationSummary& other);
  [[nodiscard]] std::string describe() const;
};

/// Depth-first over every schedule permitted by the configuration, at most
/// `max_schedules` of them.
EnumerationSummary enumerate_mix(const Mix& mix, const HarnessConfig& cfg,
                                 std::size_t max_schedules,
                                 bool stop_on_failure = false);

/// `runs` random schedules; run i uses seed `seed + i`, recorded in the
/// schedule.
EnumerationSummary random_schedules(const Mix& mix, const HarnessConfig& cfg,
                                    std::uint64_t seed, std::size_t runs);

/// Mixes over keys 1..4 used by the exhaustive checks: hand-picked
/// adversarial mixes followed by seeded random ones, for k = 2 and k = 4.
[[nodiscard]] std::vector<Mix> desk_mix_family(std::uint64_t seed,
                                               std::size_t random_mixes);

}  // namespace kst::check

#endif  // KST_CHECK_HARNESS_HPP
