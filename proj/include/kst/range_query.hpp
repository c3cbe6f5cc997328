#ifndef KST_RANGE_QUERY_HPP
#define KST_RANGE_QUERY_HPP

/// \file
/// Range query results and the validation helpers shared by the tree and
/// its tests.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "kst/node.hpp"
#include "kst/reclamation.hpp"

namespace kst {

/// Leaves gathered by one traversal, in left-to-right order.
using CollectList = std::vector<const Leaf*>;

/// Identity comparison: a replacement leaf with equal keys is a different
/// leaf.
[[nodiscard]] inline bool leaf_identity_equal(const CollectList& a,
                                              const CollectList& b) noexcept {
  return a == b;
}

[[nodiscard]] inline bool has_key_in(const Leaf& leaf, Key lo,
                                     Key hi) noexcept {
  for (const Key key : leaf.user_keys())
    if (lo <= key && key <= hi) return true;
  return false;
}

/// Keeps leaves holding at least one key in the closed range [lo, hi].
[[nodiscard]] inline CollectList filter_in_range(const CollectList& collected,
                                                 Key lo, Key hi) {
  CollectList out;
  for (const Leaf* leaf : collected)
    if (has_key_in(*leaf, lo, hi)) out.push_back(leaf);
  return out;
}

/// Flattens leaves to their keys in [lo, hi], in order.
[[nodiscard]] inline std::vector<Key> keys_in_range(
    std::span<const Leaf* const> leaves, Key lo, Key hi) {
  std::vector<Key> out;
  for (const Leaf* leaf : leaves)
    for (const Key key : leaf->user_keys())
      if (lo <= key && key <= hi) out.push_back(key);
  return out;
}

/// Leaves answering a range query. The result keeps the reclamation guard of
/// the query, so the leaves stay readable for as long as it lives; holding a
/// result for long delays reclamation for every thread.
class RangeResult {
 public:
  RangeResult() = default;
  RangeResult(Guard guard, CollectList leaves, Key lo, Key hi,
              std::size_t attempts) noexcept
      : guard_{std::move(guard)},
        leaves_{std::move(leaves)},
        lo_{lo},
        hi_{hi},
        attempts_{attempts} {}

  [[nodiscard]] const CollectList& leaves() const noexcept { return leaves_; }
  [[nodiscard]] std::vector<Key> keys() const {
    return keys_in_range(leaves_, lo_, hi_);
  }
  /// Number of collect phases run, 1 when the first attempt validated.
  [[nodiscard]] std::size_t attempts() const noexcept { return attempts_; }
  [[nodiscard]] Key lo() const noexcept { return lo_; }
  [[nodiscard]] Key hi() const noexcept { return hi_; }

  /// Drops the leaves and the guard.
  void release() noexcept {
    leaves_.clear();
    guard_.reset();
  }

 private:
  Guard guard_;
  CollectList leaves_;
  Key lo_ = 0;
  Key hi_ = 0;
  std::size_t attempts_ = 0;
};

}  // namespace kst

#endif  // KST_RANGE_QUERY_HPP
