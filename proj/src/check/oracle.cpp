#include "kst/check/oracle.hpp"

namespace kst::check {

std::string_view to_string(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::insert: return "insert";
    case OpKind::erase: return "delete";
    case OpKind::find: return "find";
    case OpKind::range: return "range";
  }
  return "?";
}

std::optional<OpKind> parse_op_kind(std::string_view s) noexcept {
  if (s == "insert") return OpKind::insert;
  if (s == "delete") return OpKind::erase;
  if (s == "find") return OpKind::find;
  if (s == "range") return OpKind::range;
  return std::nullopt;
}

std::string to_string(const Op& op) {
  std::string s{to_string(op.kind)};
  s += '(';
  s += std::to_string(op.key);
  if (op.kind == OpKind::range) {
    s += ',';
    s += std::to_string(op.hi);
  }
  s += ')';
  return s;
}

std::string to_string(OpKind kind, const OpResult& r) {
  if (kind != OpKind::range) return r.flag ? "true" : "false";
  std::string s = "[";
  for (std::size_t i = 0; i < r.keys.size(); ++i) {
    if (i != 0) s += ',';
    s += std::to_string(r.keys[i]);
  }
  s += ']';
  return s;
}

std::vector<Key> SetOracle::range(Key lo, Key hi) const {
  if (lo > hi) return {};
  return {keys_.lower_bound(lo), keys_.upper_bound(hi)};
}

OpResult SetOracle::apply(const Op& op) {
  OpResult r;
  switch (op.kind) {
    case OpKind::insert: r.flag = insert(op.key); break;
    case OpKind::erase: r.flag = erase(op.key); break;
    case OpKind::find: r.flag = contains(op.key); break;
    case OpKind::range: r.keys = range(op.key, op.hi); break;
  }
  return r;
}

OracleRun oracle_apply(const std::vector<Op>& ops, std::set<Key> initial) {
  SetOracle oracle{std::move(initial)};
  OracleRun run;
  run.results.reserve(ops.size());
  for (const Op& op : ops) run.results.push_back(oracle.apply(op));
  run.final_keys = oracle.keys();
  return run;
}

}  // namespace kst::check
