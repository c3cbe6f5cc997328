#ifndef KST_HOOKS_HPP
#define KST_HOOKS_HPP

/// \file
/// Instrumentation points of the tree.
///
/// The tree is parameterized on a hooks type. The default, NoHooks, has empty
/// inline members and compiles away. Test builds substitute a type that
/// yields to a cooperative scheduler at every failpoint, observes successful
/// child CASes and retirements, and can switch off individual tag writes or
/// validation steps to produce mutants.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace kst {

class Node;
class Internal;
struct Descriptor;

/// A failpoint precedes every shared read, CAS and store of the algorithm.
enum class Failpoint : std::uint8_t {
  op_begin,
  read_pending,
  read_child,
  read_tag,
  rflag_cas,
  pflag_cas,
  mark_cas,
  rchild_cas,
  pchild_cas,
  runflag_cas,
  punflag_cas,
  backtrack_cas,
  replace_tag_store,
  marked_tag_store,
};

inline constexpr std::size_t kFailpointCount = 14;

[[nodiscard]] constexpr std::string_view to_string(Failpoint f) noexcept {
  switch (f) {
    case Failpoint::op_begin: return "op_begin";
    case Failpoint::read_pending: return "read_pending";
    case Failpoint::read_child: return "read_child";
    case Failpoint::read_tag: return "read_tag";
    case Failpoint::rflag_cas: return "rflag_cas";
    case Failpoint::pflag_cas: return "pflag_cas";
    case Failpoint::mark_cas: return "mark_cas";
    case Failpoint::rchild_cas: return "rchild_cas";
    case Failpoint::pchild_cas: return "pchild_cas";
    case Failpoint::runflag_cas: return "runflag_cas";
    case Failpoint::punflag_cas: return "punflag_cas";
    case Failpoint::backtrack_cas: return "backtrack_cas";
    case Failpoint::replace_tag_store: return "replace_tag_store";
    case Failpoint::marked_tag_store: return "marked_tag_store";
  }
  return "?";
}

/// True for failpoints that precede a write to shared memory.
[[nodiscard]] constexpr bool is_write(Failpoint f) noexcept {
  switch (f) {
    case Failpoint::op_begin:
    case Failpoint::read_pending:
    case Failpoint::read_child:
    case Failpoint::read_tag:
      return false;
    default:
      return true;
  }
}

/// Lines of the algorithm that a mutant build leaves out.
enum class Mutation : std::uint8_t {
  drop_tag_field,         ///< leaves carry no tag: stores vanish, loads see false
  drop_replace_tag,       ///< no tag store before the Rchild CAS
  drop_marked_tag_loop,   ///< prune tags only the deleted leaf, not its siblings
  drop_marked_tag_store,  ///< prune tags nothing
  drop_double_collect,    ///< attempts after the first skip validation
};

inline constexpr Mutation kAllMutations[] = {
    Mutation::drop_tag_field, Mutation::drop_replace_tag,
    Mutation::drop_marked_tag_loop, Mutation::drop_marked_tag_store,
    Mutation::drop_double_collect};

[[nodiscard]] constexpr std::string_view to_string(Mutation m) noexcept {
  switch (m) {
    case Mutation::drop_tag_field: return "drop_tag_field";
    case Mutation::drop_replace_tag: return "drop_replace_tag";
    case Mutation::drop_marked_tag_loop: return "drop_marked_tag_loop";
    case Mutation::drop_marked_tag_store: return "drop_marked_tag_store";
    case Mutation::drop_double_collect: return "drop_double_collect";
  }
  return "?";
}

/// How a range query decides whether an attempt's collect is usable.
enum class RangeValidation : std::uint8_t {
  tagged,           ///< tags on the first attempt, double collect afterwards
  naive_tags_only,  ///< tags on every attempt; livelocks behind a stalled writer
  none,             ///< accept the first collect
};

enum class RangePhase : std::uint8_t { collect_begin, validate_begin, done };

enum class ChildCas : std::uint8_t { rchild, pchild };

struct NoHooks {
  void yield(Failpoint) noexcept {}
  [[nodiscard]] bool omits(Mutation) const noexcept { return false; }
  [[nodiscard]] RangeValidation validation() const noexcept {
    return RangeValidation::tagged;
  }
  /// `removed` was replaced by `inserted` at `parent`'s child slot `index`
  /// by the operation described by `owner`.
  void child_cas_succeeded(ChildCas, const Internal* /*parent*/,
                           std::size_t /*index*/, const Node* /*removed*/,
                           const Node* /*inserted*/,
                           const Descriptor* /*owner*/) noexcept {}
  void range_phase(RangePhase, std::size_t /*attempt*/) noexcept {}
  void range_push(const Node*) noexcept {}
  void retired(const void*) noexcept {}
};

}  // namespace kst

#endif  // KST_HOOKS_HPP
