#include "kst/check/history.hpp"

#include <charconv>
#include <sstream>

namespace kst::check {

namespace {

std::string keys_text(const std::set<Key>& keys) {
  std::string s;
  for (const Key k : keys) {
    s += ' ';
    s += std::to_string(k);
  }
  return s;
}

bool parse_key(std::string_view s, Key& out) {
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

bool parse_key_list(std::string_view s, std::vector<Key>& out) {
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') return false;
  s = s.substr(1, s.size() - 2);
  while (!s.empty()) {
    const auto comma = s.find(',');
    Key k;
    if (!parse_key(s.substr(0, comma), k)) return false;
    out.push_back(k);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return true;
}

bool parse_record(const std::string& line, OpRecord& r) {
  std::istringstream in{line};
  std::string thread, kind, tok;
  if (!(in >> thread >> kind)) return false;
  if (thread.size() < 2 || thread[0] != 't') return false;
  std::uint64_t tid;
  if (!parse_u64(std::string_view{thread}.substr(1), tid)) return false;
  r.thread = static_cast<std::uint32_t>(tid);
  const auto k = parse_op_kind(kind);
  if (!k) return false;
  r.op.kind = *k;
  if (!(in >> tok) || !parse_key(tok, r.op.key)) return false;
  if (r.op.kind == OpKind::range) {
    if (!(in >> tok) || !parse_key(tok, r.op.hi)) return false;
  }
  if (!(in >> tok) || tok != "->") return false;
  if (!(in >> tok)) return false;
  if (tok != "pending") {
    OpResult res;
    if (r.op.kind == OpKind::range) {
      if (!parse_key_list(tok, res.keys)) return false;
    } else if (tok == "true" || tok == "false") {
      res.flag = tok == "true";
    } else {
      return false;
    }
    r.result = std::move(res);
  }
  if (!(in >> tok) || tok.size() < 2 || tok[0] != '@') return false;
  if (!parse_u64(std::string_view{tok}.substr(1), r.invoke)) return false;
  if (in >> tok) {
    std::uint64_t resp;
    if (!parse_u64(tok, resp) || resp < r.invoke) return false;
    r.response = resp;
  }
  return r.result.has_value() == r.response.has_value();
}

}  // namespace

std::string to_text(const OpRecord& r) {
  std::string s = "t" + std::to_string(r.thread) + " ";
  s += to_string(r.op.kind);
  s += ' ' + std::to_string(r.op.key);
  if (r.op.kind == OpKind::range) s += ' ' + std::to_string(r.op.hi);
  s += " -> ";
  s += r.result ? to_string(r.op.kind, *r.result) : "pending";
  s += " @" + std::to_string(r.invoke);
  if (r.response) s += ' ' + std::to_string(*r.response);
  return s;
}

std::string to_text(const History& h) {
  std::string s = "initial" + keys_text(h.initial) + "\n";
  if (h.final_keys) s += "final" + keys_text(*h.final_keys) + "\n";
  for (const auto& r : h.records) s += to_text(r) + "\n";
  return s;
}

std::optional<History> parse_history(std::string_view text,
                                     std::string* error) {
  History h;
  std::istringstream in{std::string{text}};
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const char* what) -> std::optional<History> {
    if (error != nullptr)
      *error = "line " + std::to_string(lineno) + ": " + what + ": " + line;
    return std::nullopt;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream words{line};
    std::string head;
    words >> head;
    if (head == "initial" || head == "final") {
      std::set<Key> keys;
      std::string tok;
      while (words >> tok) {
        Key k;
        if (!parse_key(tok, k)) return fail("bad key");
        keys.insert(k);
      }
      if (head == "initial")
        h.initial = std::move(keys);
      else
        h.final_keys = std::move(keys);
      continue;
    }
    OpRecord r;
    if (!parse_record(line, r)) return fail("bad record");
    h.records.push_back(std::move(r));
  }
  return h;
}

}  // namespace kst::check
