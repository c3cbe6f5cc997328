#include "kst/check/linearizability.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>

namespace kst::check {

namespace {

using Mask = std::uint64_t;
using State = std::vector<Key>;  // sorted

struct MemoKey {
  Mask done;
  State state;
  friend bool operator==(const MemoKey&, const MemoKey&) = default;
};

struct MemoHash {
  std::size_t operator()(const MemoKey& k) const noexcept {
    std::size_t h = std::hash<Mask>{}(k.done);
    for (const Key x : k.state)
      h ^= std::hash<Key>{}(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

OpResult apply(const Op& op, State& s) {
  OpResult r;
  const auto it = std::lower_bound(s.begin(), s.end(), op.key);
  const bool present = it != s.end() && *it == op.key;
  switch (op.kind) {
    case OpKind::insert:
      r.flag = !present;
      if (!present) s.insert(it, op.key);
      break;
    case OpKind::erase:
      r.flag = present;
      if (present) s.erase(it);
      break;
    case OpKind::find:
      r.flag = present;
      break;
    case OpKind::range:
      if (op.key <= op.hi)
        r.keys.assign(it, std::upper_bound(s.begin(), s.end(), op.hi));
      break;
  }
  return r;
}

class Search {
 public:
  Search(const History& h, std::size_t budget, bool use_final)
      : h_{h}, budget_{budget}, use_final_{use_final} {
    const std::size_t n = h.records.size();
    if (n > 64) throw std::invalid_argument{"history longer than 64 records"};
    before_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!h.records[i].pending()) completed_ |= Mask{1} << i;
      for (std::size_t j = 0; j < n; ++j) {
        const auto& rj = h.records[j];
        if (j != i && rj.response && *rj.response < h.records[i].invoke)
          before_[i] |= Mask{1} << j;
      }
    }
    if (use_final_ && h.final_keys)
      final_.assign(h.final_keys->begin(), h.final_keys->end());
  }

  Verdict run() {
    State s(h_.initial.begin(), h_.initial.end());
    if (dfs(0, s)) return Verdict::linearizable;
    return exhausted_ ? Verdict::budget_exhausted : Verdict::not_linearizable;
  }

  std::vector<std::size_t> order;
  std::size_t explored = 0;

 private:
  bool accept(Mask done, const State& s) const {
    if ((done & completed_) != completed_) return false;
    return !(use_final_ && h_.final_keys) || s == final_;
  }

  bool dfs(Mask done, State& s) {
    if (accept(done, s)) return true;
    if (++explored > budget_) {
      exhausted_ = true;
      return false;
    }
    if (!failed_.insert(MemoKey{done, s}).second) return false;
    for (std::size_t i = 0; i < h_.records.size(); ++i) {
      const Mask bit = Mask{1} << i;
      if ((done & bit) != 0) continue;
      // Completed operations that responded before i was invoked go first.
      if ((before_[i] & completed_ & ~done) != 0) continue;
      const auto& rec = h_.records[i];
      State next = s;
      const OpResult r = apply(rec.op, next);
      if (rec.result && !(r == *rec.result)) continue;
      order.push_back(i);
      if (dfs(done | bit, next)) return true;
      order.pop_back();
      if (exhausted_) return false;
    }
    return false;
  }

  const History& h_;
  std::size_t budget_;
  bool use_final_;
  Mask completed_ = 0;
  std::vector<Mask> before_;
  State final_;
  bool exhausted_ = false;
  std::unordered_set<MemoKey, MemoHash> failed_;
};

History subset(const History& h, const std::vector<std::size_t>& keep) {
  History out;
  out.initial = h.initial;
  for (const std::size_t i : keep) out.records.push_back(h.records[i]);
  return out;
}

}  // namespace

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::linearizable: return "linearizable";
    case Verdict::not_linearizable: return "not linearizable";
    case Verdict::budget_exhausted: return "search budget exhausted";
  }
  return "?";
}

std::string LinearizabilityResult::describe(const History& h) const {
  std::string s{to_string(verdict)};
  s += '\n';
  if (verdict == Verdict::linearizable) {
    s += "witness:\n";
    for (const std::size_t i : witness) s += "  " + to_text(h.records[i]) + "\n";
  } else if (verdict == Verdict::not_linearizable) {
    s += final_state_only ? "final contents unreachable; history:\n"
                          : "conflicting operations:\n";
    for (const std::size_t i : conflict)
      s += "  " + to_text(h.records[i]) + "\n";
  }
  return s;
}

LinearizabilityResult check_linearizable(const History& history,
                                         std::size_t budget) {
  LinearizabilityResult result;
  Search search{history, budget, true};
  result.verdict = search.run();
  result.explored = search.explored;
  if (result.verdict == Verdict::linearizable) {
    result.witness = std::move(search.order);
    return result;
  }
  if (result.verdict == Verdict::budget_exhausted) return result;

  std::vector<std::size_t> keep(history.records.size());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
  Search no_final{history, budget, false};
  if (no_final.run() == Verdict::linearizable) {
    result.final_state_only = true;
    result.conflict = std::move(keep);
    return result;
  }
  // Drop records one at a time while the remainder stays non-linearizable.
  for (std::size_t pos = keep.size(); pos-- > 0;) {
    std::vector<std::size_t> trial = keep;
    trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(pos));
    const History sub = subset(history, trial);
    Search s{sub, budget, false};
    if (s.run() == Verdict::not_linearizable) keep = std::move(trial);
  }
  result.conflict = std::move(keep);
  return result;
}

}  // namespace kst::check
