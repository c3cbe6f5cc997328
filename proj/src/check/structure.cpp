#include "kst/check/structure.hpp"

#include <limits>
#include <vector>

namespace kst::check {

namespace {

constexpr Key kMinKey = std::numeric_limits<Key>::min();

const Node* load(const Internal* n, std::size_t i) {
  return n->child(i).load(std::memory_order_acquire);
}

// Iterative, so degenerate trees from sorted insertions do not exhaust the
// stack. Paths are rebuilt from parent links only when reporting.
struct Walker {
  struct Frame {
    const Node* node;
    std::size_t parent;  // index into frames, or npos for root.c[0]
    std::size_t slot;
    Key lo;  // subtree keys lie in [lo, hi); hi == kInfinity is unbounded
    Key hi;
  };
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  StructureOptions opts;
  StructureReport report;
  std::vector<Frame> frames;

  void fail(const std::string& path, std::string what) {
    report.violations.push_back({path, std::move(what)});
  }

  std::string path_of(std::size_t f) const {
    std::vector<std::size_t> slots;
    for (; f != npos; f = frames[f].parent) slots.push_back(frames[f].slot);
    std::string path = "root";
    for (auto it = slots.rbegin(); it != slots.rend(); ++it)
      path += ".c[" + std::to_string(*it) + "]";
    return path;
  }

  void walk(const Node* top, std::size_t arity) {
    std::vector<std::size_t> todo;
    frames.push_back({top, npos, 0, kMinKey, kInfinity});
    todo.push_back(0);
    while (!todo.empty()) {
      const std::size_t f = todo.back();
      todo.pop_back();
      const Frame fr = frames[f];
      visit(f, fr, arity, todo);
    }
  }

  void visit(std::size_t f, const Frame& fr, std::size_t arity,
             std::vector<std::size_t>& todo) {
    const Node* node = fr.node;
    if (node == nullptr) {
      fail(path_of(f), "null child");
      return;
    }
    if (node->arity() != arity) {
      fail(path_of(f), "arity " + std::to_string(node->arity()) +
                           ", expected " + std::to_string(arity));
      return;
    }
    const auto keys = node->keys();
    if (node->is_leaf()) {
      const Leaf* leaf = as_leaf(node);
      ++report.leaves;
      const std::size_t n = leaf->key_count();
      if (n > arity - 1) {
        fail(path_of(f), "leaf key count exceeds k-1");
        return;
      }
      report.keys += n;
      for (std::size_t i = 0; i < keys.size(); ++i) {
        if (i < n) {
          if (!is_user_key(keys[i])) fail(path_of(f), "sentinel among leaf keys");
          if (i > 0 && keys[i - 1] >= keys[i])
            fail(path_of(f), "leaf keys not strictly increasing");
          if (keys[i] < fr.lo || (fr.hi != kInfinity && keys[i] >= fr.hi))
            fail(path_of(f), "leaf key " + std::to_string(keys[i]) +
                                 " outside routing bounds");
        } else if (keys[i] != kInfinity) {
          fail(path_of(f), "leaf padding is not the sentinel");
        }
      }
      return;
    }

    const Internal* in = as_internal(node);
    ++report.internals;
    const Descriptor* d = in->pending().load(std::memory_order_acquire);
    if (d == nullptr || (opts.require_clean && d->kind != DescriptorKind::clean))
      check_pending(in, path_of(f));
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (!is_user_key(keys[i])) fail(path_of(f), "sentinel key in internal node");
      if (i > 0 && keys[i - 1] >= keys[i])
        fail(path_of(f), "internal keys not strictly increasing");
    }
    if (keys.front() < fr.lo || (fr.hi != kInfinity && keys.back() >= fr.hi))
      fail(path_of(f), "internal keys outside routing bounds");
    for (std::size_t i = arity; i-- > 0;) {
      const Key clo = i == 0 ? fr.lo : keys[i - 1];
      const Key chi = i == arity - 1 ? fr.hi : keys[i];
      frames.push_back({load(in, i), f, i, clo, chi});
      todo.push_back(frames.size() - 1);
    }
  }

  void check_pending(const Internal* in, const std::string& path) {
    const Descriptor* d = in->pending().load(std::memory_order_acquire);
    if (d == nullptr)
      fail(path, "null pending");
    else if (opts.require_clean && d->kind != DescriptorKind::clean)
      fail(path, "pending is not Clean");
  }
};

void collect_leaves_into(const Node* node, std::vector<const Leaf*>& out) {
  std::vector<const Node*> stack{node};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->is_leaf()) {
      out.push_back(as_leaf(n));
      continue;
    }
    const Internal* in = as_internal(n);
    for (std::size_t i = in->arity(); i-- > 0;) stack.push_back(load(in, i));
  }
}

}  // namespace

std::string StructureReport::describe() const {
  if (ok()) return "ok";
  std::string s;
  for (const auto& v : violations) s += v.path + ": " + v.what + "\n";
  return s;
}

StructureReport check_structure(const Internal* root, StructureOptions opts) {
  Walker w{opts, {}, {}};
  const std::size_t arity = root->arity();
  w.check_pending(root, "root");
  for (const Key key : root->keys())
    if (key != kInfinity) w.fail("root", "root key is not the sentinel");
  for (std::size_t i = 1; i < arity; ++i) {
    const Node* c = load(root, i);
    if (c == nullptr || !c->is_leaf() || !as_leaf(c)->empty())
      w.fail("root.c[" + std::to_string(i) + "]",
             "root child beyond the first is not an empty leaf");
  }
  w.walk(load(root, 0), arity);
  return w.report;
}

std::vector<const Leaf*> collect_leaves(const Internal* root) {
  std::vector<const Leaf*> out;
  collect_leaves_into(load(root, 0), out);
  return out;
}

std::vector<Key> collect_keys(const Internal* root) {
  std::vector<Key> out;
  for (const Leaf* leaf : collect_leaves(root))
    for (const Key key : leaf->user_keys()) out.push_back(key);
  return out;
}

std::unordered_set<const void*> reachable_objects(const Internal* root) {
  std::unordered_set<const void*> out;
  std::vector<const Node*> stack{root};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    out.insert(n);
    if (n->is_leaf()) continue;
    const Internal* in = as_internal(n);
    out.insert(in->pending().load(std::memory_order_acquire));
    for (std::size_t i = 0; i < in->arity(); ++i) stack.push_back(load(in, i));
  }
  return out;
}

}  // namespace kst::check
