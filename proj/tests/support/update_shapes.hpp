#ifndef KST_TESTS_UPDATE_SHAPES_HPP
#define KST_TESTS_UPDATE_SHAPES_HPP

// The four update shapes for k = 4, keys a..f encoded as 1..6. Each check
// builds the pre-state with ordinary operations, applies the update, and
// compares the resulting subtree under root.c[0] with the expected shape.

#include <string>
#include <vector>

#include "kst/check/structure.hpp"
#include "kst/kary_tree.hpp"

namespace kst::testing {

struct ShapeOutcome {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += what + "\n";
    }
  }
};

inline std::vector<Key> leaf_keys(const Node* n) {
  const auto k = as_leaf(n)->user_keys();
  return {k.begin(), k.end()};
}

inline const Node* top(const Tree& tree) {
  return tree.root()->child(0).load();
}

inline void expect_valid(ShapeOutcome& out, const Tree& tree) {
  const auto report = check::check_structure(tree);
  out.expect(report.ok(), "structure: " + report.describe());
}

/// Leaf {a,c,d} + insert b: internal (b,c,d) over leaves (a),(b),(c),(d),
/// and the replaced leaf is tagged.
inline ShapeOutcome sprouting_insertion() {
  ShapeOutcome out;
  Tree tree{4};
  for (Key k : {1, 3, 4}) tree.insert(k);
  Guard guard = tree.domain().pin();
  const Node* before = top(tree);
  out.expect(before->is_leaf() && leaf_keys(before) == std::vector<Key>{1, 3, 4},
             "pre-state leaf (a,c,d)");
  out.expect(tree.insert(2), "insert b returns true");
  const Node* after = top(tree);
  out.expect(!after->is_leaf(), "replacement is internal");
  if (!after->is_leaf()) {
    const Internal* in = as_internal(after);
    const auto keys = in->keys();
    out.expect(std::vector<Key>(keys.begin(), keys.end()) ==
                   std::vector<Key>{2, 3, 4},
               "internal keys (b,c,d)");
    for (std::size_t i = 0; i < 4; ++i) {
      const Node* c = in->child(i).load();
      out.expect(c->is_leaf() && leaf_keys(c) == std::vector<Key>{
                                                     static_cast<Key>(i + 1)},
                 "child " + std::to_string(i) + " holds one key");
    }
  }
  out.expect(as_leaf(before)->tagged(), "replaced leaf tagged");
  expect_valid(out, tree);
  return out;
}

/// Leaf {a,c} + insert b: leaf (a,b,c).
inline ShapeOutcome simple_insertion() {
  ShapeOutcome out;
  Tree tree{4};
  for (Key k : {1, 3}) tree.insert(k);
  Guard guard = tree.domain().pin();
  const Node* before = top(tree);
  out.expect(tree.insert(2), "insert b returns true");
  const Node* after = top(tree);
  out.expect(after->is_leaf() && leaf_keys(after) == std::vector<Key>{1, 2, 3},
             "leaf (a,b,c)");
  out.expect(after != before, "a new leaf replaced the old one");
  out.expect(as_leaf(before)->tagged(), "replaced leaf tagged");
  expect_valid(out, tree);
  return out;
}

/// Leaf {a,b,d} - delete b: leaf (a,d).
inline ShapeOutcome simple_deletion() {
  ShapeOutcome out;
  Tree tree{4};
  for (Key k : {1, 2, 4}) tree.insert(k);
  Guard guard = tree.domain().pin();
  const Node* before = top(tree);
  out.expect(tree.erase(2), "delete b returns true");
  const Node* after = top(tree);
  out.expect(after->is_leaf() && leaf_keys(after) == std::vector<Key>{1, 4},
             "leaf (a,d)");
  out.expect(as_leaf(before)->tagged(), "replaced leaf tagged");
  expect_valid(out, tree);
  return out;
}

/// Parent with children (), (b), (), (e,f) - delete b: the parent is
/// replaced by leaf (e,f) and its other children are tagged.
inline ShapeOutcome pruning_deletion() {
  ShapeOutcome out;
  Tree tree{4};
  for (Key k : {2, 3, 4, 1}) tree.insert(k);
  tree.erase(1);
  tree.erase(3);
  tree.insert(5);
  tree.insert(6);
  tree.erase(4);
  Guard guard = tree.domain().pin();
  const Node* parent = top(tree);
  out.expect(!parent->is_leaf(), "pre-state parent is internal");
  if (parent->is_leaf()) return out;
  const Internal* p = as_internal(parent);
  const std::vector<std::vector<Key>> pre{{}, {2}, {}, {5, 6}};
  std::vector<const Node*> children;
  for (std::size_t i = 0; i < 4; ++i) {
    children.push_back(p->child(i).load());
    out.expect(children[i]->is_leaf() && leaf_keys(children[i]) == pre[i],
               "pre-state child " + std::to_string(i));
  }
  out.expect(tree.erase(2), "delete b returns true");
  const Node* after = top(tree);
  out.expect(after == children[3], "grandparent now points at leaf (e,f)");
  out.expect(after->is_leaf() && leaf_keys(after) == std::vector<Key>{5, 6},
             "leaf (e,f)");
  for (std::size_t i = 0; i < 3; ++i)
    out.expect(as_leaf(children[i])->tagged(),
               "removed child " + std::to_string(i) + " tagged");
  out.expect(!as_leaf(children[3])->tagged(), "surviving leaf untagged");
  expect_valid(out, tree);
  return out;
}

}  // namespace kst::testing

#endif  // KST_TESTS_UPDATE_SHAPES_HPP
