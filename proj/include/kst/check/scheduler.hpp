#ifndef KST_CHECK_SCHEDULER_HPP
#define KST_CHECK_SCHEDULER_HPP

/// \file
/// Deterministic cooperative execution of test threads.
///
/// Each logical thread runs on its own fiber within the calling OS thread.
/// Only one runs at a time; it gives up control at every failpoint, and a
/// chooser decides who runs next. A step resumes one thread until its next
/// failpoint or until it finishes. Choosers can enumerate interleavings
/// depth-first (optionally bounding the number of preemptions), pick them at
/// random from a seed, replay a recorded schedule, or follow a script.
///
/// Schedules use one line per step:
///
///     # seed 42
///     t1 read_child
///     halt t0 rchild_cas
///
/// `tN fp` resumes thread N, which was waiting at failpoint fp; `halt tN fp`
/// stops thread N forever at fp.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kst/hooks.hpp"

namespace kst::check {

using ThreadId = std::uint32_t;

struct Step {
  ThreadId thread = 0;
  Failpoint point = Failpoint::op_begin;
  bool halt = false;
  friend bool operator==(const Step&, const Step&) = default;
};

struct Schedule {
  std::optional<std::uint64_t> seed;
  std::vector<Step> steps;
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

[[nodiscard]] std::string to_text(const Schedule& s);
[[nodiscard]] std::optional<Schedule> parse_schedule(std::string_view text,
                                                     std::string* error = nullptr);
[[nodiscard]] std::optional<Failpoint> parse_failpoint(std::string_view s) noexcept;

/// One alternative at a choice point: resume `thread`, or halt it.
struct Option {
  ThreadId thread = 0;
  bool halt = false;
  friend bool operator==(const Option&, const Option&) = default;
};

struct ThreadView {
  bool finished = false;
  bool halted = false;
  Failpoint waiting_at = Failpoint::op_begin;
  std::size_t resumes = 0;
};

struct ChoicePoint {
  /// Never empty. Options[0] continues the running thread when it can.
  std::span<const Option> options;
  std::span<const ThreadView> threads;
  /// Thread that ran the previous step, if it is still runnable.
  std::optional<ThreadId> current;
  std::size_t step = 0;
};

class Chooser {
 public:
  virtual ~Chooser() = default;
  virtual Option choose(const ChoicePoint& cp) = 0;
};

struct ExecutionLimits {
  /// Maximum number of switches away from a runnable thread; nullopt means
  /// unbounded.
  std::optional<std::size_t> preemption_bound;
  /// Offer to halt the thread that just yielded, at most once per execution.
  bool allow_halt = false;
  /// Offer to halt any waiting thread (scripted runs).
  bool allow_halt_any = false;
  /// Steps after which the execution is abandoned as hung.
  std::size_t step_budget = 100'000;
};

struct ExecutionOutcome {
  Schedule schedule;
  std::size_t steps = 0;
  std::size_t preemptions = 0;
  std::optional<ThreadId> halted;
  bool budget_exceeded = false;
  /// Threads that neither finished nor were halted.
  std::vector<ThreadId> unfinished;
};

class StackPool;

/// Runs one execution. Thread bodies call yield() at their failpoints.
class CooperativeScheduler {
 public:
  using Body = std::function<void()>;

  CooperativeScheduler();
  ~CooperativeScheduler();
  CooperativeScheduler(const CooperativeScheduler&) = delete;
  CooperativeScheduler& operator=(const CooperativeScheduler&) = delete;

  /// Runs `bodies` to completion (or until halted / out of budget) under
  /// `chooser`. Threads that did not finish are unwound before returning.
  /// Exceptions escaping a body are rethrown here after unwinding.
  ExecutionOutcome run(std::vector<Body> bodies, Chooser& chooser,
                       const ExecutionLimits& limits);

  /// Called from inside a body. Suspends the running thread.
  void yield(Failpoint point);

  /// Thread whose body is running; only valid inside a body.
  [[nodiscard]] ThreadId running() const noexcept { return running_; }

 private:
  struct Thread;

  void resume(ThreadId t);

  std::unique_ptr<StackPool> stacks_;
  std::vector<std::unique_ptr<Thread>> threads_;
  ThreadId running_ = 0;
};

/// Depth-first enumeration of every schedule allowed by the limits. Use as
///
///     DfsChooser dfs;
///     do { scheduler.run(bodies(), dfs, limits); } while (dfs.advance());
class DfsChooser final : public Chooser {
 public:
  Option choose(const ChoicePoint& cp) override;
  /// Moves to the next unexplored schedule; false when all are done.
  bool advance();
  /// Choice points with more than one option on the current path.
  [[nodiscard]] std::size_t depth() const noexcept { return frames_.size(); }

 private:
  struct Frame {
    std::vector<Option> options;
    std::size_t index = 0;
  };
  std::vector<Frame> frames_;
  std::size_t cursor_ = 0;
};

/// Uniform choice among the offered options.
class RandomChooser final : public Chooser {
 public:
  explicit RandomChooser(std::uint64_t seed) : rng_{seed} {}
  Option choose(const ChoicePoint& cp) override;

 private:
  std::mt19937_64 rng_;
};

/// Follows a recorded schedule; falls back to options[0] past its end.
class ReplayChooser final : public Chooser {
 public:
  explicit ReplayChooser(Schedule s) : schedule_{std::move(s)} {}
  Option choose(const ChoicePoint& cp) override;
  /// False when a recorded step was not available at its choice point.
  [[nodiscard]] bool faithful() const noexcept { return faithful_; }

 private:
  Schedule schedule_;
  std::size_t next_ = 0;
  bool faithful_ = true;
};

/// Runs threads according to directives, then falls back to the lowest
/// runnable thread.
class ScriptChooser final : public Chooser {
 public:
  struct Directive {
    ThreadId thread = 0;
    /// Run until the thread waits at this failpoint for the `occurrence`-th
    /// time since the directive started (1-based); nullopt runs it to
    /// completion.
    std::optional<Failpoint> until;
    std::size_t occurrence = 1;
    bool halt = false;
  };

  static Directive run_until(ThreadId t, Failpoint fp, std::size_t n = 1) {
    return {t, fp, n, false};
  }
  static Directive run_to_end(ThreadId t) { return {t, std::nullopt, 1, false}; }
  static Directive halt(ThreadId t) { return {t, std::nullopt, 1, true}; }

  explicit ScriptChooser(std::vector<Directive> script)
      : script_{std::move(script)} {}
  Option choose(const ChoicePoint& cp) override;
  [[nodiscard]] bool completed() const noexcept {
    return next_ >= script_.size();
  }

 private:
  std::vector<Directive> script_;
  std::size_t next_ = 0;
  std::size_t seen_ = 0;
  bool started_ = false;
};

}  // namespace kst::check

#endif  // KST_CHECK_SCHEDULER_HPP
