#ifndef KST_NODE_HPP
#define KST_NODE_HPP

/// \file
/// Node and descriptor object model of the k-ary search tree.
///
/// Nodes carry an immutable sorted key array of length k-1 padded with the
/// infinity sentinel. Internal nodes additionally hold k atomic child
/// references and an atomic `pending` descriptor reference; leaves hold a
/// write-once `tag` bit that range queries use for validation.
///
/// Nodes are allocated as a single block with the key array (and, for
/// internal nodes, the child array) stored after the object header.

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>

namespace kst {

using Key = std::int64_t;

/// Sentinel strictly greater than every user key. Excluded from the key space.
inline constexpr Key kInfinity = std::numeric_limits<Key>::max();

[[nodiscard]] constexpr bool is_user_key(Key key) noexcept {
  return key != kInfinity;
}

/// Invalid tree configuration, e.g. arity below two.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation invoked outside its precondition, e.g. the sentinel as a key.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kMinArity = 2;
inline constexpr std::size_t kMaxArity = 1024;

enum class NodeKind : std::uint8_t { leaf, internal };

class Leaf;
class Internal;
struct Descriptor;

class Node {
 public:
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  [[nodiscard]] NodeKind kind() const noexcept { return kind_; }
  [[nodiscard]] bool is_leaf() const noexcept {
    return kind_ == NodeKind::leaf;
  }
  [[nodiscard]] std::size_t arity() const noexcept { return arity_; }

  /// All k-1 key slots, sentinel padding included.
  [[nodiscard]] std::span<const Key> keys() const noexcept {
    return {keys_, arity_ - 1};
  }

  /// A node is non-empty iff it is internal or a leaf holding a key.
  [[nodiscard]] bool non_empty() const noexcept;

  /// Frees this node only; children of an internal node are left alone.
  static void destroy(Node* node) noexcept;

  /// Frees a node and, for internal nodes, every node below it. Used for
  /// subtrees that were never published.
  static void destroy_subtree(Node* node) noexcept;

 protected:
  Node(NodeKind kind, std::uint32_t arity, Key* keys) noexcept
      : kind_{kind}, arity_{arity}, keys_{keys} {}
  ~Node() = default;

 private:
  const NodeKind kind_;
  const std::uint32_t arity_;
  Key* const keys_;
};

class Leaf final : public Node {
 public:
  /// Builds a leaf holding `sorted_keys` (strictly increasing user keys,
  /// at most arity-1 of them); remaining slots hold the sentinel.
  [[nodiscard]] static Leaf* make(std::size_t arity,
                                  std::span<const Key> sorted_keys);
  [[nodiscard]] static Leaf* make_empty(std::size_t arity) {
    return make(arity, {});
  }

  [[nodiscard]] std::size_t key_count() const noexcept { return key_count_; }
  [[nodiscard]] bool empty() const noexcept { return key_count_ == 0; }
  [[nodiscard]] std::span<const Key> user_keys() const noexcept {
    return keys().first(key_count_);
  }
  [[nodiscard]] bool contains(Key key) const noexcept {
    const auto k = user_keys();
    return std::binary_search(k.begin(), k.end(), key);
  }

  [[nodiscard]] bool tagged() const noexcept {
    return tag_.load(std::memory_order_acquire);
  }
  /// false -> true only.
  void set_tag() noexcept { tag_.store(true, std::memory_order_seq_cst); }

 private:
  friend class Node;
  Leaf(std::uint32_t arity, std::uint32_t key_count, Key* keys) noexcept
      : Node{NodeKind::leaf, arity, keys}, key_count_{key_count} {}
  ~Leaf() = default;

  std::atomic<bool> tag_{false};
  const std::uint32_t key_count_;
};

class Internal final : public Node {
 public:
  /// `keys` must have arity-1 entries; `children` must have arity non-null
  /// entries. Takes ownership of `pending`.
  [[nodiscard]] static Internal* make(std::size_t arity,
                                      std::span<const Key> keys,
                                      std::span<Node* const> children,
                                      Descriptor* pending);

  [[nodiscard]] std::atomic<Node*>& child(std::size_t i) noexcept {
    assert(i < arity());
    return children_[i];
  }
  [[nodiscard]] const std::atomic<Node*>& child(std::size_t i) const noexcept {
    assert(i < arity());
    return children_[i];
  }
  [[nodiscard]] std::atomic<Descriptor*>& pending() noexcept {
    return pending_;
  }
  [[nodiscard]] const std::atomic<Descriptor*>& pending() const noexcept {
    return pending_;
  }

  /// Index of the child whose subtree may hold `key`: the smallest i with
  /// key < keys()[i], or arity-1 when key is at least every key. Child i
  /// covers [keys()[i-1], keys()[i]).
  [[nodiscard]] std::size_t child_index(Key key) const noexcept {
    const auto k = keys();
    return static_cast<std::size_t>(
        std::upper_bound(k.begin(), k.end(), key) - k.begin());
  }

 private:
  friend class Node;
  Internal(std::uint32_t arity, Key* keys, std::atomic<Node*>* children,
           Descriptor* pending) noexcept
      : Node{NodeKind::internal, arity, keys},
        children_{children},
        pending_{pending} {}
  ~Internal() = default;

  std::atomic<Node*>* const children_;
  std::atomic<Descriptor*> pending_;
};

[[nodiscard]] inline Leaf* as_leaf(Node* node) noexcept {
  assert(node->is_leaf());
  return static_cast<Leaf*>(node);
}
[[nodiscard]] inline const Leaf* as_leaf(const Node* node) noexcept {
  assert(node->is_leaf());
  return static_cast<const Leaf*>(node);
}
[[nodiscard]] inline Internal* as_internal(Node* node) noexcept {
  assert(!node->is_leaf());
  return static_cast<Internal*>(node);
}
[[nodiscard]] inline const Internal* as_internal(const Node* node) noexcept {
  assert(!node->is_leaf());
  return static_cast<const Internal*>(node);
}

inline bool Node::non_empty() const noexcept {
  return !is_leaf() || !static_cast<const Leaf*>(this)->empty();
}

// Descriptors record an in-progress update so that any thread can finish it.
// They are immutable once constructed and every CAS installs a fresh one, so
// pointer identity distinguishes operation attempts.

enum class DescriptorKind : std::uint8_t { clean, replace_flag, prune_flag, mark };

struct Descriptor {
  const DescriptorKind kind;

 protected:
  explicit constexpr Descriptor(DescriptorKind k) noexcept : kind{k} {}
  ~Descriptor() = default;
};

struct Clean final : Descriptor {
  constexpr Clean() noexcept : Descriptor{DescriptorKind::clean} {}
};

/// Replace `leaf`, the child of `parent` at `child_index`, by `new_child`.
struct ReplaceFlag final : Descriptor {
  ReplaceFlag(Leaf* l, Internal* p, Node* replacement, std::size_t index) noexcept
      : Descriptor{DescriptorKind::replace_flag},
        leaf{l},
        parent{p},
        new_child{replacement},
        child_index{index} {}

  Leaf* const leaf;
  Internal* const parent;
  Node* const new_child;
  const std::size_t child_index;
};

/// Remove `leaf` by splicing `parent` out of `grandparent` at
/// `grandparent_index`. `parent_pending` is the value of parent->pending()
/// seen by the search that created this descriptor.
struct PruneFlag final : Descriptor {
  PruneFlag(Leaf* l, Internal* p, Internal* gp, Descriptor* ppending,
            std::size_t gp_index) noexcept
      : Descriptor{DescriptorKind::prune_flag},
        leaf{l},
        parent{p},
        grandparent{gp},
        parent_pending{ppending},
        grandparent_index{gp_index} {}

  Leaf* const leaf;
  Internal* const parent;
  Internal* const grandparent;
  Descriptor* const parent_pending;
  const std::size_t grandparent_index;
};

/// Installed permanently in a parent about to be pruned.
struct Mark final : Descriptor {
  explicit Mark(PruneFlag* f) noexcept
      : Descriptor{DescriptorKind::mark}, flag{f} {}

  PruneFlag* const flag;
};

void destroy_descriptor(Descriptor* d) noexcept;

struct DescriptorDeleter {
  void operator()(Descriptor* d) const noexcept { destroy_descriptor(d); }
};
struct SubtreeDeleter {
  void operator()(Node* n) const noexcept { Node::destroy_subtree(n); }
};

template <typename T>
using DescriptorPtr = std::unique_ptr<T, DescriptorDeleter>;
using SubtreePtr = std::unique_ptr<Node, SubtreeDeleter>;

}  // namespace kst

#endif  // KST_NODE_HPP
