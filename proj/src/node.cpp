#include "kst/node.hpp"

#include <new>
#include <vector>

namespace kst {

namespace {

static_assert(sizeof(Leaf) % alignof(Key) == 0);
static_assert(sizeof(Internal) % alignof(std::atomic<Node*>) == 0);
static_assert(sizeof(std::atomic<Node*>) % alignof(Key) == 0);

void check_arity(std::size_t arity) {
  if (arity < kMinArity || arity > kMaxArity)
    throw ConfigError{"arity must be in [2, 1024]"};
}

}  // namespace

Leaf* Leaf::make(std::size_t arity, std::span<const Key> sorted_keys) {
  check_arity(arity);
  assert(sorted_keys.size() <= arity - 1);
  assert(std::is_sorted(sorted_keys.begin(), sorted_keys.end()));

  void* mem = ::operator new(sizeof(Leaf) + (arity - 1) * sizeof(Key));
  auto* keys = reinterpret_cast<Key*>(static_cast<std::byte*>(mem) +
                                      sizeof(Leaf));
  auto* end = std::uninitialized_copy(sorted_keys.begin(), sorted_keys.end(),
                                      keys);
  std::uninitialized_fill(end, keys + (arity - 1), kInfinity);
  return ::new (mem) Leaf{static_cast<std::uint32_t>(arity),
                          static_cast<std::uint32_t>(sorted_keys.size()),
                          keys};
}

Internal* Internal::make(std::size_t arity, std::span<const Key> keys,
                         std::span<Node* const> children,
                         Descriptor* pending) {
  check_arity(arity);
  assert(keys.size() == arity - 1);
  assert(children.size() == arity);
  assert(pending != nullptr);

  void* mem = ::operator new(sizeof(Internal) +
                             arity * sizeof(std::atomic<Node*>) +
                             (arity - 1) * sizeof(Key));
  auto* child_storage = reinterpret_cast<std::atomic<Node*>*>(
      static_cast<std::byte*>(mem) + sizeof(Internal));
  for (std::size_t i = 0; i < arity; ++i) {
    assert(children[i] != nullptr);
    ::new (child_storage + i) std::atomic<Node*>{children[i]};
  }
  auto* key_storage = reinterpret_cast<Key*>(child_storage + arity);
  std::uninitialized_copy(keys.begin(), keys.end(), key_storage);
  return ::new (mem) Internal{static_cast<std::uint32_t>(arity), key_storage,
                              child_storage, pending};
}

void Node::destroy(Node* node) noexcept {
  if (node == nullptr) return;
  if (node->is_leaf()) {
    static_cast<Leaf*>(node)->~Leaf();
  } else {
    auto* internal = static_cast<Internal*>(node);
    for (std::size_t i = 0; i < internal->arity(); ++i)
      internal->child(i).~atomic();
    internal->~Internal();
  }
  ::operator delete(static_cast<void*>(node));
}

void Node::destroy_subtree(Node* node) noexcept {
  if (node == nullptr) return;
  std::vector<Node*> stack{node};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (!n->is_leaf()) {
      auto* internal = static_cast<Internal*>(n);
      for (std::size_t i = 0; i < internal->arity(); ++i)
        stack.push_back(internal->child(i).load(std::memory_order_relaxed));
      destroy_descriptor(internal->pending().load(std::memory_order_relaxed));
    }
    destroy(n);
  }
}

void destroy_descriptor(Descriptor* d) noexcept {
  if (d == nullptr) return;
  switch (d->kind) {
    case DescriptorKind::clean:
      delete static_cast<Clean*>(d);
      return;
    case DescriptorKind::replace_flag:
      delete static_cast<ReplaceFlag*>(d);
      return;
    case DescriptorKind::prune_flag:
      delete static_cast<PruneFlag*>(d);
      return;
    case DescriptorKind::mark:
      delete static_cast<Mark*>(d);
      return;
  }
}

}  // namespace kst
