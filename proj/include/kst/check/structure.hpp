#ifndef KST_CHECK_STRUCTURE_HPP
#define KST_CHECK_STRUCTURE_HPP

/// \file
/// Structural invariant walker and quiescent views of a tree.
///
/// All functions read the tree with plain loads and must only run while no
/// operation is in progress, or, in the deterministic harness, while every
/// other thread is suspended.

#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "kst/node.hpp"

namespace kst::check {

struct StructureOptions {
  /// Require every reachable pending field to hold a Clean descriptor.
  /// Disable when threads were abandoned mid-operation.
  bool require_clean = true;
};

struct Violation {
  std::string path;  ///< e.g. "root.c[0].c[3]", 0-based child indices
  std::string what;
};

struct StructureReport {
  std::vector<Violation> violations;
  std::size_t internals = 0;
  std::size_t leaves = 0;
  std::size_t keys = 0;

  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
  [[nodiscard]] std::string describe() const;
};

/// Checks the full k-ary shape, key ordering and sentinel padding, the
/// search-tree property and (optionally) clean pending fields. The root is
/// checked against its fixed initial form: all keys sentinel, children 2..k
/// empty leaves.
[[nodiscard]] StructureReport check_structure(const Internal* root,
                                              StructureOptions opts = {});

/// Keys stored in the subtree below root.c[0], in order.
[[nodiscard]] std::vector<Key> collect_keys(const Internal* root);

/// Leaves below root.c[0], left to right.
[[nodiscard]] std::vector<const Leaf*> collect_leaves(const Internal* root);

/// Nodes reachable through child pointers from the root (root included) and
/// the descriptors installed in their pending fields.
[[nodiscard]] std::unordered_set<const void*> reachable_objects(
    const Internal* root);

template <typename TreeT>
  requires requires(const TreeT& t) { t.root(); }
[[nodiscard]] StructureReport check_structure(const TreeT& tree,
                                              StructureOptions opts = {}) {
  return check_structure(tree.root(), opts);
}
template <typename TreeT>
  requires requires(const TreeT& t) { t.root(); }
[[nodiscard]] std::vector<Key> collect_keys(const TreeT& tree) {
  return collect_keys(tree.root());
}

}  // namespace kst::check

#endif  // KST_CHECK_STRUCTURE_HPP
