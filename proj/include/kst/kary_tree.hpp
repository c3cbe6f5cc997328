#ifndef KST_KARY_TREE_HPP
#define KST_KARY_TREE_HPP

/// \file
/// Non-blocking leaf-oriented k-ary search tree with linearizable range
/// queries.
///
/// Updates coordinate through descriptors installed in the `pending` field of
/// internal nodes; a thread that finds a descriptor in its way finishes that
/// operation before retrying its own. Before a leaf is unlinked it is tagged,
/// which lets a range query validate its first traversal by checking that no
/// collected leaf is tagged. Later attempts fall back to comparing two
/// consecutive traversals.

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <vector>

#include "kst/hooks.hpp"
#include "kst/node.hpp"
#include "kst/range_query.hpp"
#include "kst/reclamation.hpp"

namespace kst {

template <typename Hooks = NoHooks>
class BasicTree {
 public:
  /// Snapshot returned by search(). `gparent` is null when `parent` is the
  /// root. Child indices are 0-based.
  struct SearchResult {
    Internal* gparent;
    Internal* parent;
    Leaf* leaf;
    Descriptor* ppending;
    Descriptor* gppending;
    std::size_t pindex;
    std::size_t gpindex;
  };

  /// Throws ConfigError unless 2 <= arity <= 1024.
  explicit BasicTree(std::size_t arity,
                     EpochDomain& domain = EpochDomain::global(),
                     Hooks hooks = {});
  ~BasicTree();

  BasicTree(const BasicTree&) = delete;
  BasicTree& operator=(const BasicTree&) = delete;

  /// Set operations. Keys must not be kInfinity (UsageError).
  bool insert(Key key);
  bool erase(Key key);
  bool contains(Key key);

  /// Leaves holding keys in [lo, hi]. Requires lo <= hi, neither kInfinity.
  RangeResult range_query(Key lo, Key hi);

  /// Keys in [lo, hi], copied out. `attempts` receives the number of
  /// collect phases when non-null.
  std::vector<Key> range_keys(Key lo, Key hi, std::size_t* attempts = nullptr);

  /// Algorithm steps, exposed for tests. The caller must hold a guard of
  /// domain() for as long as it uses the returned pointers.
  SearchResult search(Key key);
  void help(Descriptor* op);
  void help_replace(ReplaceFlag* op);
  bool help_prune(PruneFlag* op);
  void help_marked(PruneFlag* op);

  [[nodiscard]] std::size_t arity() const noexcept { return arity_; }
  [[nodiscard]] Internal* root() const noexcept { return root_; }
  [[nodiscard]] Hooks& hooks() noexcept { return hooks_; }
  [[nodiscard]] EpochDomain& domain() const noexcept { return *domain_; }

 private:
  static void check_key(Key key) {
    if (!is_user_key(key)) throw UsageError{"key must not be the sentinel"};
  }

  Descriptor* read_pending(Internal* node) {
    hooks_.yield(Failpoint::read_pending);
    return node->pending().load(std::memory_order_acquire);
  }
  Node* read_child(Internal* node, std::size_t i) {
    hooks_.yield(Failpoint::read_child);
    return node->child(i).load(std::memory_order_acquire);
  }
  template <typename T>
  bool cas(Failpoint fp, std::atomic<T*>& cell, T* expected, T* desired) {
    hooks_.yield(fp);
    return cell.compare_exchange_strong(expected, desired,
                                        std::memory_order_seq_cst);
  }
  bool cas_pending(Failpoint fp, Internal* node, Descriptor* expected,
                   Descriptor* desired) {
    return cas<Descriptor>(fp, node->pending(), expected, desired);
  }
  bool is_tagged(const Leaf* leaf) {
    if (hooks_.omits(Mutation::drop_tag_field)) return false;
    return leaf->tagged();
  }
  void tag(Failpoint fp, Leaf* leaf) {
    hooks_.yield(fp);
    if (!hooks_.omits(Mutation::drop_tag_field)) leaf->set_tag();
  }

  void retire_node(Node* node) {
    hooks_.retired(node);
    domain_->retire(node, [](void* p) noexcept {
      Node::destroy(static_cast<Node*>(p));
    });
  }
  void retire_descriptor(Descriptor* d) {
    hooks_.retired(d);
    domain_->retire(d, [](void* p) noexcept {
      destroy_descriptor(static_cast<Descriptor*>(p));
    });
  }

  /// Replacement for `leaf` holding its keys plus `key`: a leaf, or when
  /// `leaf` is full an internal node with k single-key leaf children.
  Node* make_inserted(const Leaf* leaf, Key key) const;
  Node* make_erased(const Leaf* leaf, Key key) const;

  bool validate_tags(const CollectList& collected, std::size_t attempt);

  const std::size_t arity_;
  EpochDomain* const domain_;
  Hooks hooks_;
  Internal* const root_;
};

using Tree = BasicTree<>;

template <typename Hooks>
BasicTree<Hooks>::BasicTree(std::size_t arity, EpochDomain& domain,
                            Hooks hooks)
    : arity_{arity},
      domain_{&domain},
      hooks_{std::move(hooks)},
      root_{[arity] {
        if (arity < kMinArity || arity > kMaxArity)
          throw ConfigError{"arity must be in [2, 1024]"};
        std::vector<SubtreePtr> owned;
        std::vector<Node*> children;
        for (std::size_t i = 0; i < arity; ++i) {
          owned.emplace_back(Leaf::make_empty(arity));
          children.push_back(owned.back().get());
        }
        const std::vector<Key> keys(arity - 1, kInfinity);
        DescriptorPtr<Clean> clean{new Clean};
        Internal* root = Internal::make(arity, keys, children, clean.get());
        clean.release();
        for (auto& c : owned) c.release();
        return root;
      }()} {}

template <typename Hooks>
BasicTree<Hooks>::~BasicTree() {
  // Threads abandoned mid-operation can leave a ReplaceFlag whose new child
  // was never linked; nothing else owns that subtree.
  std::vector<Internal*> stack{root_};
  std::vector<Node*> orphans;
  while (!stack.empty()) {
    Internal* n = stack.back();
    stack.pop_back();
    Descriptor* d = n->pending().load(std::memory_order_relaxed);
    if (d->kind == DescriptorKind::replace_flag) {
      auto* op = static_cast<ReplaceFlag*>(d);
      if (op->parent == n &&
          n->child(op->child_index).load(std::memory_order_relaxed) !=
              op->new_child)
        orphans.push_back(op->new_child);
    }
    for (std::size_t i = 0; i < arity_; ++i) {
      Node* c = n->child(i).load(std::memory_order_relaxed);
      if (!c->is_leaf()) stack.push_back(as_internal(c));
    }
  }
  for (Node* n : orphans) Node::destroy_subtree(n);
  Node::destroy_subtree(root_);
}

template <typename Hooks>
Node* BasicTree<Hooks>::make_inserted(const Leaf* leaf, Key key) const {
  const auto old = leaf->user_keys();
  std::vector<Key> s(old.begin(), old.end());
  s.insert(std::upper_bound(s.begin(), s.end(), key), key);
  if (old.size() < arity_ - 1) return Leaf::make(arity_, s);

  // Sprouting: k keys, one per new leaf; the k-1 largest route.
  std::vector<SubtreePtr> owned;
  std::vector<Node*> children;
  for (const Key k : s) {
    owned.emplace_back(Leaf::make(arity_, std::span<const Key>{&k, 1}));
    children.push_back(owned.back().get());
  }
  DescriptorPtr<Clean> clean{new Clean};
  Internal* node = Internal::make(
      arity_, std::span<const Key>{s}.subspan(1), children, clean.get());
  clean.release();
  for (auto& c : owned) c.release();
  return node;
}

template <typename Hooks>
Node* BasicTree<Hooks>::make_erased(const Leaf* leaf, Key key) const {
  std::vector<Key> s;
  for (const Key k : leaf->user_keys())
    if (k != key) s.push_back(k);
  return Leaf::make(arity_, s);
}

template <typename Hooks>
typename BasicTree<Hooks>::SearchResult BasicTree<Hooks>::search(Key key) {
  SearchResult r{};
  r.parent = root_;
  r.ppending = read_pending(root_);
  r.pindex = 0;
  Node* node = read_child(root_, 0);
  while (!node->is_leaf()) {
    r.gparent = r.parent;
    r.gppending = r.ppending;
    r.parent = as_internal(node);
    r.ppending = read_pending(r.parent);
    r.gpindex = r.pindex;
    r.pindex = r.parent->child_index(key);
    node = read_child(r.parent, r.pindex);
  }
  r.leaf = as_leaf(node);
  return r;
}

template <typename Hooks>
bool BasicTree<Hooks>::contains(Key key) {
  check_key(key);
  hooks_.yield(Failpoint::op_begin);
  Guard guard = domain_->pin();
  return search(key).leaf->contains(key);
}

template <typename Hooks>
bool BasicTree<Hooks>::insert(Key key) {
  check_key(key);
  hooks_.yield(Failpoint::op_begin);
  for (;;) {
    Guard guard = domain_->pin();
    const SearchResult s = search(key);
    if (s.leaf->contains(key)) return false;
    if (s.ppending->kind != DescriptorKind::clean) {
      help(s.ppending);
      continue;
    }
    SubtreePtr new_child{make_inserted(s.leaf, key)};
    DescriptorPtr<ReplaceFlag> op{
        new ReplaceFlag{s.leaf, s.parent, new_child.get(), s.pindex}};
    if (cas_pending(Failpoint::rflag_cas, s.parent, s.ppending, op.get())) {
      new_child.release();
      ReplaceFlag* flag = op.release();
      retire_descriptor(s.ppending);
      help_replace(flag);
      return true;
    }
    op.reset();
    new_child.reset();
    help(read_pending(s.parent));
  }
}

template <typename Hooks>
bool BasicTree<Hooks>::erase(Key key) {
  check_key(key);
  hooks_.yield(Failpoint::op_begin);
  for (;;) {
    Guard guard = domain_->pin();
    const SearchResult s = search(key);
    if (!s.leaf->contains(key)) return false;
    if (s.gppending != nullptr &&
        s.gppending->kind != DescriptorKind::clean) {
      help(s.gppending);
      continue;
    }
    if (s.ppending->kind != DescriptorKind::clean) {
      help(s.ppending);
      continue;
    }
    std::size_t ccount = 0;
    for (std::size_t i = 0; i < arity_; ++i)
      if (read_child(s.parent, i)->non_empty()) ++ccount;

    if (ccount == 2 && s.leaf->key_count() == 1) {
      // Only root.c1 of the root can be non-empty, so parent is not root.
      assert(s.gparent != nullptr);
      DescriptorPtr<PruneFlag> op{new PruneFlag{s.leaf, s.parent, s.gparent,
                                                s.ppending, s.gpindex}};
      if (cas_pending(Failpoint::pflag_cas, s.gparent, s.gppending,
                      op.get())) {
        PruneFlag* flag = op.release();
        retire_descriptor(s.gppending);
        if (help_prune(flag)) return true;
      } else {
        op.reset();
        help(read_pending(s.gparent));
      }
    } else {
      SubtreePtr new_child{make_erased(s.leaf, key)};
      DescriptorPtr<ReplaceFlag> op{
          new ReplaceFlag{s.leaf, s.parent, new_child.get(), s.pindex}};
      if (cas_pending(Failpoint::rflag_cas, s.parent, s.ppending, op.get())) {
        new_child.release();
        ReplaceFlag* flag = op.release();
        retire_descriptor(s.ppending);
        help_replace(flag);
        return true;
      }
      op.reset();
      new_child.reset();
      help(read_pending(s.parent));
    }
  }
}

template <typename Hooks>
void BasicTree<Hooks>::help(Descriptor* op) {
  if (op == nullptr) return;
  switch (op->kind) {
    case DescriptorKind::replace_flag:
      help_replace(static_cast<ReplaceFlag*>(op));
      return;
    case DescriptorKind::prune_flag:
      help_prune(static_cast<PruneFlag*>(op));
      return;
    case DescriptorKind::mark:
      help_marked(static_cast<Mark*>(op)->flag);
      return;
    case DescriptorKind::clean:
      return;
  }
}

template <typename Hooks>
bool BasicTree<Hooks>::help_prune(PruneFlag* op) {
  DescriptorPtr<Mark> mark{new Mark{op}};
  const bool result = cas_pending(Failpoint::mark_cas, op->parent,
                                  op->parent_pending, mark.get());
  if (result) {
    mark.release();
    retire_descriptor(op->parent_pending);
  } else {
    mark.reset();
  }
  Descriptor* new_value = read_pending(op->parent);
  if (result || (new_value->kind == DescriptorKind::mark &&
                 static_cast<Mark*>(new_value)->flag == op)) {
    help_marked(op);
    return true;
  }
  help(new_value);
  DescriptorPtr<Clean> clean{new Clean};
  if (cas_pending(Failpoint::backtrack_cas, op->grandparent, op,
                  clean.get())) {
    clean.release();
    retire_descriptor(op);
  }
  return false;
}

template <typename Hooks>
void BasicTree<Hooks>::help_replace(ReplaceFlag* op) {
  if (!hooks_.omits(Mutation::drop_replace_tag))
    tag(Failpoint::replace_tag_store, op->leaf);
  if (cas<Node>(Failpoint::rchild_cas, op->parent->child(op->child_index),
                op->leaf, op->new_child)) {
    hooks_.child_cas_succeeded(ChildCas::rchild, op->parent, op->child_index,
                               op->leaf, op->new_child, op);
    retire_node(op->leaf);
  }
  DescriptorPtr<Clean> clean{new Clean};
  if (cas_pending(Failpoint::runflag_cas, op->parent, op, clean.get())) {
    clean.release();
    retire_descriptor(op);
  }
}

template <typename Hooks>
void BasicTree<Hooks>::help_marked(PruneFlag* op) {
  Internal* p = op->parent;
  Node* other = nullptr;
  for (std::size_t i = 0; i < arity_ && other == nullptr; ++i) {
    Node* c = read_child(p, i);
    if (c != op->leaf && c->non_empty()) other = c;
  }
  if (other == nullptr) other = read_child(p, 0);

  if (hooks_.omits(Mutation::drop_marked_tag_loop)) {
    if (!hooks_.omits(Mutation::drop_marked_tag_store))
      tag(Failpoint::marked_tag_store, op->leaf);
  } else {
    for (std::size_t i = 0; i < arity_; ++i) {
      Node* u = read_child(p, i);
      // p is marked, so its children other than `other` are leaves.
      if (u != other && u->is_leaf() &&
          !hooks_.omits(Mutation::drop_marked_tag_store))
        tag(Failpoint::marked_tag_store, as_leaf(u));
    }
  }

  if (cas<Node>(Failpoint::pchild_cas, op->grandparent->child(op->grandparent_index),
                p, other)) {
    hooks_.child_cas_succeeded(ChildCas::pchild, op->grandparent,
                               op->grandparent_index, p, other, op);
    // p's children and pending are frozen once p is marked.
    for (std::size_t i = 0; i < arity_; ++i) {
      Node* u = p->child(i).load(std::memory_order_acquire);
      if (u != other) retire_node(u);
    }
    retire_descriptor(p->pending().load(std::memory_order_acquire));
    retire_node(p);
  }
  DescriptorPtr<Clean> clean{new Clean};
  if (cas_pending(Failpoint::punflag_cas, op->grandparent, op, clean.get())) {
    clean.release();
    retire_descriptor(op);
  }
}

template <typename Hooks>
bool BasicTree<Hooks>::validate_tags(const CollectList& collected,
                                     std::size_t attempt) {
  for (std::size_t i = 0; i < collected.size(); ++i) {
    hooks_.yield(Failpoint::read_tag);
    if (i == 0) hooks_.range_phase(RangePhase::validate_begin, attempt);
    if (is_tagged(collected[i])) return false;
  }
  return true;
}

template <typename Hooks>
RangeResult BasicTree<Hooks>::range_query(Key lo, Key hi) {
  if (!is_user_key(lo) || !is_user_key(hi) || lo > hi)
    throw UsageError{"range query needs lo <= hi, both below the sentinel"};
  hooks_.yield(Failpoint::op_begin);
  // One guard across all attempts: the double collect compares leaf
  // addresses, which must not be recycled between two collects.
  Guard guard = domain_->pin();
  std::vector<Node*> stack;
  CollectList collected;
  CollectList prev_collected;
  for (std::size_t attempt = 1;; ++attempt) {
    std::swap(prev_collected, collected);
    collected.clear();
    stack.clear();

    hooks_.yield(Failpoint::read_child);
    hooks_.range_phase(RangePhase::collect_begin, attempt);
    stack.push_back(root_->child(0).load(std::memory_order_acquire));
    while (!stack.empty()) {
      Node* u = stack.back();
      stack.pop_back();
      if (u->is_leaf()) {
        collected.push_back(as_leaf(u));
        continue;
      }
      auto* node = as_internal(u);
      const auto a = node->keys();
      std::size_t r = arity_ - 1;
      while (r > 0 && hi < a[r - 1]) --r;
      std::size_t l = 0;
      while (l < arity_ - 1 && lo >= a[l]) ++l;
      for (std::size_t i = r + 1; i-- > l;) {
        Node* c = read_child(node, i);
        hooks_.range_push(c);
        stack.push_back(c);
      }
    }

    bool valid = true;
    switch (hooks_.validation()) {
      case RangeValidation::tagged:
        if (attempt == 1)
          valid = validate_tags(collected, attempt);
        else if (!hooks_.omits(Mutation::drop_double_collect))
          valid = leaf_identity_equal(collected, prev_collected);
        break;
      case RangeValidation::naive_tags_only:
        valid = validate_tags(collected, attempt);
        break;
      case RangeValidation::none:
        break;
    }
    if (valid) {
      hooks_.range_phase(RangePhase::done, attempt);
      return RangeResult{std::move(guard), filter_in_range(collected, lo, hi),
                         lo, hi, attempt};
    }
  }
}

template <typename Hooks>
std::vector<Key> BasicTree<Hooks>::range_keys(Key lo, Key hi,
                                              std::size_t* attempts) {
  RangeResult result = range_query(lo, hi);
  if (attempts != nullptr) *attempts = result.attempts();
  return result.keys();
}

extern template class BasicTree<NoHooks>;

}  // namespace kst

#endif  // KST_KARY_TREE_HPP
