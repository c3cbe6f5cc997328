#ifndef KST_CHECK_ORACLE_HPP
#define KST_CHECK_ORACLE_HPP

/// \file
/// Sequential ordered-set oracle and the operation vocabulary shared by the
/// history recorder, the linearizability checker and the harness.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kst/node.hpp"

namespace kst::check {

enum class OpKind : std::uint8_t { insert, erase, find, range };

[[nodiscard]] std::string_view to_string(OpKind kind) noexcept;
[[nodiscard]] std::optional<OpKind> parse_op_kind(std::string_view s) noexcept;

/// One set operation. `hi` is used by range queries only.
struct Op {
  OpKind kind = OpKind::find;
  Key key = 0;
  Key hi = 0;

  friend bool operator==(const Op&, const Op&) = default;
};

/// Return value of an operation: `flag` for insert/erase/find, `keys` for
/// range queries.
struct OpResult {
  bool flag = false;
  std::vector<Key> keys;

  friend bool operator==(const OpResult&, const OpResult&) = default;
};

[[nodiscard]] std::string to_string(const Op& op);
[[nodiscard]] std::string to_string(OpKind kind, const OpResult& r);

class SetOracle {
 public:
  SetOracle() = default;
  explicit SetOracle(std::set<Key> initial) : keys_{std::move(initial)} {}

  bool insert(Key key) { return keys_.insert(key).second; }
  bool erase(Key key) { return keys_.erase(key) != 0; }
  [[nodiscard]] bool contains(Key key) const { return keys_.contains(key); }
  /// Keys in the closed interval [lo, hi].
  [[nodiscard]] std::vector<Key> range(Key lo, Key hi) const;

  OpResult apply(const Op& op);

  [[nodiscard]] const std::set<Key>& keys() const noexcept { return keys_; }

 private:
  std::set<Key> keys_;
};

struct OracleRun {
  std::vector<OpResult> results;
  std::set<Key> final_keys;
};

[[nodiscard]] OracleRun oracle_apply(const std::vector<Op>& ops,
                                     std::set<Key> initial = {});

}  // namespace kst::check

#endif  // KST_CHECK_ORACLE_HPP
