#ifndef KST_CHECK_LINEARIZABILITY_HPP
#define KST_CHECK_LINEARIZABILITY_HPP

/// \file
/// Linearizability checker for small set histories.
///
/// Searches for a sequential order of the operations that respects real-time
/// order (an operation that responded before another was invoked comes
/// first) and reproduces every recorded return value on a sequential set.
/// Operations without a response may be placed anywhere after their
/// invocation or left out. When the history records final contents, the
/// order must also end in that state. Visited (done set, contents) pairs are
/// memoized, which keeps histories of a few dozen operations cheap.

#include <cstddef>
#include <string>
#include <vector>

#include "kst/check/history.hpp"

namespace kst::check {

enum class Verdict { linearizable, not_linearizable, budget_exhausted };

[[nodiscard]] std::string_view to_string(Verdict v) noexcept;

struct LinearizabilityResult {
  Verdict verdict = Verdict::linearizable;
  /// Record indices in linearization order; pending records left out of the
  /// order are absent. Set when linearizable.
  std::vector<std::size_t> witness;
  /// Record indices of a small sub-history that is already not
  /// linearizable on its own (greedy minimization). Set when not
  /// linearizable.
  std::vector<std::size_t> conflict;
  /// True when only the final-contents constraint fails.
  bool final_state_only = false;
  std::size_t explored = 0;

  [[nodiscard]] bool ok() const noexcept {
    return verdict == Verdict::linearizable;
  }
  [[nodiscard]] std::string describe(const History& h) const;
};

/// `budget` bounds the number of search states visited; exceeding it yields
/// Verdict::budget_exhausted rather than a verdict on the history. At most
/// 64 records.
[[nodiscard]] LinearizabilityResult check_linearizable(
    const History& history, std::size_t budget = 1'000'000);

}  // namespace kst::check

#endif  // KST_CHECK_LINEARIZABILITY_HPP
