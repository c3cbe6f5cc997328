#include <doctest.h>

#include <random>
#include <vector>

#include "kst/check/structure.hpp"
#include "kst/kary_tree.hpp"

using namespace kst;

namespace {

struct NodeDeleter {
  void operator()(Node* n) const noexcept { Node::destroy_subtree(n); }
};

// Internal node with the given routing keys over empty leaves.
std::unique_ptr<Node, NodeDeleter> make_router(std::vector<Key> keys) {
  const std::size_t arity = keys.size() + 1;
  std::vector<Node*> children;
  for (std::size_t i = 0; i < arity; ++i)
    children.push_back(Leaf::make_empty(arity));
  return std::unique_ptr<Node, NodeDeleter>{
      Internal::make(arity, keys, children, new Clean)};
}

std::size_t brute_child_index(std::span<const Key> keys, Key key) {
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (key < keys[i]) return i;
  return keys.size();
}

}  // namespace

TEST_CASE("fresh tree is empty and structurally valid") {
  for (std::size_t k : {2u, 4u, 64u}) {
    Tree tree{k};
    for (Key x = -5; x < 50; ++x) CHECK_FALSE(tree.contains(x));
    const auto report = check::check_structure(tree);
    CHECK_MESSAGE(report.ok(), report.describe());
    CHECK(report.leaves == 1);
    CHECK(report.internals == 0);
    CHECK(check::collect_keys(tree).empty());
  }
}

TEST_CASE("root layout") {
  Tree tree{4};
  const Internal* root = tree.root();
  for (Key a : root->keys()) CHECK(a == kInfinity);
  CHECK(root->pending().load()->kind == DescriptorKind::clean);
  std::vector<const Node*> seen;
  for (std::size_t i = 0; i < 4; ++i) {
    const Node* c = root->child(i).load();
    REQUIRE(c->is_leaf());
    CHECK(as_leaf(c)->empty());
    for (const Node* s : seen) CHECK(s != c);
    seen.push_back(c);
  }
}

TEST_CASE("arity outside [2, 1024] is rejected") {
  CHECK_THROWS_AS(Tree{0}, ConfigError);
  CHECK_THROWS_AS(Tree{1}, ConfigError);
  CHECK_THROWS_AS(Tree{1025}, ConfigError);
  CHECK_NOTHROW(Tree{1024});
}

TEST_CASE("sentinel key is rejected") {
  Tree tree{4};
  CHECK_THROWS_AS(tree.insert(kInfinity), UsageError);
  CHECK_THROWS_AS(tree.erase(kInfinity), UsageError);
  CHECK_THROWS_AS(tree.contains(kInfinity), UsageError);
  CHECK_THROWS_AS((void)tree.range_query(0, kInfinity), UsageError);
  CHECK_THROWS_AS((void)tree.range_query(5, 4), UsageError);
}

TEST_CASE("child index routing") {
  // keys (b, c, d) with a < b < c < d
  auto node = make_router({2, 3, 4});
  const Internal* in = as_internal(node.get());
  CHECK(in->child_index(1) == 0);
  CHECK(in->child_index(4) == 3);
  CHECK(in->child_index(2) == 1);
  CHECK(in->child_index(100) == 3);

  auto padded = make_router({10, 20, kInfinity});
  CHECK(as_internal(padded.get())->child_index(15) == 1);
  CHECK(as_internal(padded.get())->child_index(25) == 2);

  std::mt19937_64 rng{7};
  for (int round = 0; round < 200; ++round) {
    std::vector<Key> keys(1 + rng() % 9);
    for (auto& k : keys) k = static_cast<Key>(rng() % 50);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    auto n = make_router(keys);
    for (Key x = -2; x < 55; ++x)
      CHECK(as_internal(n.get())->child_index(x) ==
            brute_child_index(keys, x));
  }
}

TEST_CASE("leaf keys and padding") {
  const std::vector<Key> keys{3, 8};
  Leaf* leaf = Leaf::make(5, keys);
  CHECK(leaf->key_count() == 2);
  CHECK(leaf->keys().size() == 4);
  CHECK(leaf->keys()[0] == 3);
  CHECK(leaf->keys()[1] == 8);
  CHECK(leaf->keys()[2] == kInfinity);
  CHECK(leaf->keys()[3] == kInfinity);
  CHECK(leaf->contains(8));
  CHECK_FALSE(leaf->contains(5));
  CHECK(leaf->non_empty());
  Node::destroy(leaf);

  Leaf* empty = Leaf::make_empty(2);
  CHECK_FALSE(empty->non_empty());
  CHECK(empty->keys()[0] == kInfinity);
  Node::destroy(empty);
}

TEST_CASE("tag only goes from false to true") {
  Leaf* leaf = Leaf::make_empty(4);
  CHECK_FALSE(leaf->tagged());
  leaf->set_tag();
  for (int i = 0; i < 100; ++i) CHECK(leaf->tagged());
  leaf->set_tag();
  CHECK(leaf->tagged());
  Node::destroy(leaf);
}

TEST_CASE("walker flags a corrupted child") {
  Tree tree{4};
  for (Key k : {1, 3, 4, 2}) tree.insert(k);
  REQUIRE(check::check_structure(tree).ok());
  Internal* in = as_internal(tree.root()->child(0).load());
  // Child 0 routes keys below 2; plant a leaf holding 9 there.
  const Key bad = 9;
  Leaf* planted = Leaf::make(4, std::span<const Key>{&bad, 1});
  Node* old = in->child(0).exchange(planted);
  const auto report = check::check_structure(tree);
  CHECK_FALSE(report.ok());
  REQUIRE(!report.violations.empty());
  CHECK(report.violations.front().path == "root.c[0].c[0]");
  in->child(0).store(old);
  Node::destroy(planted);
  CHECK(check::check_structure(tree).ok());
}

TEST_CASE("walker flags non-clean pending") {
  Tree tree{4};
  Internal* root = tree.root();
  auto* mark = new Mark{nullptr};
  Descriptor* old = root->pending().exchange(mark);
  CHECK_FALSE(check::check_structure(tree).ok());
  CHECK(check::check_structure(tree, {.require_clean = false}).ok());
  root->pending().store(old);
  destroy_descriptor(mark);
}
