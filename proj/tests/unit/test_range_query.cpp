#include <doctest.h>

#include <random>
#include <set>
#include <unordered_set>

#include "kst/check/structure.hpp"
#include "kst/kary_tree.hpp"

using namespace kst;

namespace {

struct Recorder {
  std::vector<const Node*> pushed;
  std::size_t writes = 0;
  bool recording = false;
};

struct RecordingHooks : NoHooks {
  Recorder* rec = nullptr;
  void yield(Failpoint f) noexcept {
    if (rec->recording && is_write(f)) ++rec->writes;
  }
  void range_push(const Node* n) noexcept {
    if (rec->recording) rec->pushed.push_back(n);
  }
};

Leaf* leaf_of(std::initializer_list<Key> keys) {
  return Leaf::make(3, std::vector<Key>(keys));
}

// Key bounds [lo, hi) of every node below root.c[0].
void bounds(const Node* n, Key lo, Key hi,
            std::vector<std::tuple<const Node*, Key, Key>>& out) {
  out.emplace_back(n, lo, hi);
  if (n->is_leaf()) return;
  const Internal* in = as_internal(n);
  const auto a = in->keys();
  for (std::size_t i = 0; i < in->arity(); ++i)
    bounds(in->child(i).load(), i == 0 ? lo : a[i - 1],
           i + 1 == in->arity() ? hi : a[i], out);
}

}  // namespace

TEST_CASE("range over an empty tree") {
  Tree tree{4};
  auto r = tree.range_query(1, 100);
  CHECK(r.leaves().empty());
  CHECK(r.keys().empty());
  CHECK(r.attempts() == 1);
}

TEST_CASE("range over keys 1..20") {
  Tree tree{4};
  for (Key k = 1; k <= 20; ++k) tree.insert(k);
  CHECK(tree.range_keys(3, 7) == std::vector<Key>{3, 4, 5, 6, 7});
  CHECK(tree.range_keys(20, 20) == std::vector<Key>{20});
  CHECK(tree.range_keys(21, 40).empty());
  CHECK(tree.range_keys(-5, 0).empty());
  const auto all = tree.range_keys(0, 1000);
  CHECK(all.size() == 20);
  CHECK(std::is_sorted(all.begin(), all.end()));
}

TEST_CASE("result leaves each hold a key in range") {
  Tree tree{4};
  for (Key k = 0; k < 100; k += 3) tree.insert(k);
  auto r = tree.range_query(10, 40);
  for (const Leaf* leaf : r.leaves()) CHECK(has_key_in(*leaf, 10, 40));
  CHECK(r.keys() == std::vector<Key>{12, 15, 18, 21, 24, 27, 30, 33, 36, 39});
}

TEST_CASE("leaf identity comparison") {
  Leaf* x = leaf_of({1});
  Leaf* y = leaf_of({2});
  Leaf* y2 = leaf_of({2});
  CHECK(leaf_identity_equal({x, y}, {x, y}));
  CHECK_FALSE(leaf_identity_equal({x, y}, {x, y2}));
  CHECK_FALSE(leaf_identity_equal({x}, {x, y}));
  CHECK(leaf_identity_equal({}, {}));
  for (Leaf* l : {x, y, y2}) Node::destroy(l);
}

TEST_CASE("filtering keeps leaves with a key in the closed range") {
  Leaf* a = leaf_of({1, 2});
  Leaf* b = leaf_of({5});
  Leaf* c = leaf_of({9, 10});
  Leaf* e = leaf_of({});
  Leaf* four = leaf_of({4});
  const auto kept = filter_in_range({a, b, c}, 4, 8);
  CHECK(kept == CollectList{b});
  CHECK(keys_in_range(kept, 4, 8) == std::vector<Key>{5});
  CHECK(filter_in_range({e, e}, 0, 100).empty());
  CHECK(filter_in_range({four}, 4, 4) == CollectList{four});
  // Keys outside the range are clipped from the projection.
  CHECK(keys_in_range(CollectList{a, c}, 2, 9) == std::vector<Key>{2, 9});
  for (Leaf* l : {a, b, c, e, four}) Node::destroy(l);
}

TEST_CASE("traversal skips exactly the subtrees disjoint from the range") {
  for (std::size_t k : {2u, 4u, 8u}) {
    CAPTURE(k);
    Recorder rec;
    RecordingHooks hooks;
    hooks.rec = &rec;
    BasicTree<RecordingHooks> tree{k, EpochDomain::global(), hooks};
    std::mt19937_64 rng{k * 31};
    for (int i = 0; i < 300; ++i) tree.insert(static_cast<Key>(rng() % 500));
    for (int i = 0; i < 100; ++i) tree.erase(static_cast<Key>(rng() % 500));

    std::vector<std::tuple<const Node*, Key, Key>> all;
    bounds(tree.root()->child(0).load(), std::numeric_limits<Key>::min(),
           kInfinity, all);
    for (int q = 0; q < 50; ++q) {
      const Key lo = static_cast<Key>(rng() % 500);
      const Key hi = lo + static_cast<Key>(rng() % 60);
      rec.pushed.clear();
      rec.recording = true;
      auto r = tree.range_query(lo, hi);
      rec.recording = false;
      const std::unordered_set<const Node*> pushed(rec.pushed.begin(),
                                                   rec.pushed.end());
      const Node* top = tree.root()->child(0).load();
      for (const auto& [n, blo, bhi] : all) {
        if (n == top) continue;
        const bool overlaps = blo <= hi && (bhi == kInfinity || lo < bhi);
        // A node is pushed iff its interval overlaps and so does every
        // ancestor's; ancestors of a pushed node overlap trivially.
        if (pushed.contains(n)) CHECK(overlaps);
      }
      // Completeness: every leaf holding a key in range was collected.
      std::set<const Leaf*> got(r.leaves().begin(), r.leaves().end());
      for (const Leaf* leaf : check::collect_leaves(tree.root()))
        if (has_key_in(*leaf, lo, hi)) CHECK(got.contains(leaf));
      CHECK(r.attempts() == 1);
      CHECK(rec.writes == 0);
    }
  }
}

TEST_CASE("overlapping children are all visited") {
  Recorder rec;
  RecordingHooks hooks;
  hooks.rec = &rec;
  BasicTree<RecordingHooks> tree{4, EpochDomain::global(), hooks};
  for (Key k : {1, 3, 4, 2}) tree.insert(k);  // internal (2,3,4)
  rec.recording = true;
  (void)tree.range_query(2, 3);
  rec.recording = false;
  const Internal* in = as_internal(tree.root()->child(0).load());
  REQUIRE(rec.pushed.size() == 2);
  // Pushed right to left so the traversal visits left to right.
  CHECK(rec.pushed[0] == in->child(2).load());
  CHECK(rec.pushed[1] == in->child(1).load());
}
