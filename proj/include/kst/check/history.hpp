#ifndef KST_CHECK_HISTORY_HPP
#define KST_CHECK_HISTORY_HPP

/// \file
/// Concurrent operation histories and their line-oriented text form.
///
///     initial 1 2
///     final 1 3
///     t0 insert 3 -> true @1 4
///     t1 range 0 4 -> [1,2] @2 9
///     t2 delete 2 -> pending @3
///
/// Timestamps are ticks of a logical clock shared by all threads. A record
/// without a response belongs to a thread that never finished the operation.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kst/check/oracle.hpp"

namespace kst::check {

struct OpRecord {
  std::uint32_t thread = 0;
  Op op;
  std::optional<OpResult> result;
  std::uint64_t invoke = 0;
  std::optional<std::uint64_t> response;

  [[nodiscard]] bool pending() const noexcept { return !response.has_value(); }
  friend bool operator==(const OpRecord&, const OpRecord&) = default;
};

struct History {
  std::set<Key> initial;
  /// Set contents observed once every thread stopped, when known.
  std::optional<std::set<Key>> final_keys;
  std::vector<OpRecord> records;

  friend bool operator==(const History&, const History&) = default;
};

[[nodiscard]] std::string to_text(const OpRecord& r);
[[nodiscard]] std::string to_text(const History& h);

/// Parses the text form. On failure returns nullopt and, if `error` is
/// non-null, a message naming the offending line.
[[nodiscard]] std::optional<History> parse_history(std::string_view text,
                                                   std::string* error = nullptr);

}  // namespace kst::check

#endif  // KST_CHECK_HISTORY_HPP
