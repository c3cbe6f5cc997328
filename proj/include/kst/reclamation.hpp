#ifndef KST_RECLAMATION_HPP
#define KST_RECLAMATION_HPP

/// \file
/// Epoch-based memory reclamation.
///
/// A thread pins the domain before touching shared nodes and unpins when it
/// is done. Objects are retired once unlinked and freed only after the global
/// epoch has advanced far enough that no guard active at retire time can
/// still be held. Pins nest: only the outermost pin announces an epoch.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <unordered_set>
#include <vector>

namespace kst {

/// When unpinning threads try to advance the epoch and free garbage.
enum class ReclaimPolicy : std::uint8_t {
  threshold,  ///< once the local retire list grows past a threshold
  eager,      ///< on every outermost unpin
  never,      ///< only on explicit collect()/drain_quiescent()
};

class EpochDomain;

namespace detail {
struct EpochParticipant;
}  // namespace detail

/// RAII epoch participation token. Move-only.
class Guard {
 public:
  Guard() noexcept = default;
  Guard(Guard&& other) noexcept
      : domain_{other.domain_}, participant_{other.participant_} {
    other.domain_ = nullptr;
    other.participant_ = nullptr;
  }
  Guard& operator=(Guard&& other) noexcept {
    if (this != &other) {
      reset();
      domain_ = other.domain_;
      participant_ = other.participant_;
      other.domain_ = nullptr;
      other.participant_ = nullptr;
    }
    return *this;
  }
  Guard(const Guard&) = delete;
  Guard& operator=(const Guard&) = delete;
  ~Guard() { reset(); }

  void reset() noexcept;
  [[nodiscard]] bool active() const noexcept { return domain_ != nullptr; }

 private:
  friend class EpochDomain;
  Guard(EpochDomain* d, detail::EpochParticipant* p) noexcept
      : domain_{d}, participant_{p} {}

  EpochDomain* domain_ = nullptr;
  detail::EpochParticipant* participant_ = nullptr;
};

struct ReclamationStats {
  std::uint64_t retired = 0;
  std::uint64_t freed = 0;
  std::uint64_t epoch = 0;
  [[nodiscard]] std::uint64_t pending() const noexcept {
    return retired - freed;
  }
};

class EpochDomain {
 public:
  using Deleter = void (*)(void*) noexcept;

  /// An object retired in epoch e is freed once the global epoch reaches
  /// e + kGracePeriods. Three rather than the textbook two: a helper may
  /// reach a retired node through a descriptor that is still installed, and
  /// the retiring thread stays pinned only until that descriptor is removed.
  static constexpr std::uint64_t kGracePeriods = 3;

#ifdef NDEBUG
  static constexpr bool kCheckRetireDefault = false;
#else
  static constexpr bool kCheckRetireDefault = true;
#endif

  /// With `check_retire` set, retiring an object twice is reported as a
  /// contract violation. Costs a global lock per retire.
  explicit EpochDomain(ReclaimPolicy policy = ReclaimPolicy::threshold,
                       std::size_t threshold = 128,
                       bool check_retire = kCheckRetireDefault);
  ~EpochDomain();

  EpochDomain(const EpochDomain&) = delete;
  EpochDomain& operator=(const EpochDomain&) = delete;

  [[nodiscard]] Guard pin();

  /// `object` must already be unreachable for threads that pin afterwards.
  void retire(void* object, Deleter deleter);

  /// Tries to advance the global epoch. Fails while some pinned thread has
  /// not yet observed the current epoch.
  bool try_advance();

  /// Advances if possible and frees this thread's eligible garbage plus
  /// orphaned garbage of exited threads. Returns the number freed.
  std::size_t collect();

  /// Frees every retired object. Only valid while no thread is pinned.
  std::size_t drain_quiescent();

  [[nodiscard]] ReclaimPolicy policy() const noexcept {
    return policy_.load(std::memory_order_relaxed);
  }
  void set_policy(ReclaimPolicy p) noexcept {
    policy_.store(p, std::memory_order_relaxed);
  }
  [[nodiscard]] ReclamationStats stats() const;
  [[nodiscard]] bool pinned_by_this_thread();

  /// Process-wide domain used by trees unless told otherwise.
  static EpochDomain& global();

  /// Contract violations (double retire) call this handler. Default aborts.
  using ViolationHandler = std::function<void(const char*)>;
  static void set_violation_handler(ViolationHandler handler);

  struct Retired {
    void* object;
    Deleter deleter;
    std::uint64_t epoch;
  };

 private:
  friend class Guard;
  friend struct ThreadCache;
  using Participant = detail::EpochParticipant;

  Participant& local();
  Participant& acquire_participant();
  void release_participant(Participant& p) noexcept;
  void unpin(Participant& p) noexcept;
  void collect_local(Participant& p) noexcept;
  std::size_t free_eligible(std::vector<Retired>& list,
                            std::uint64_t epoch) noexcept;
  std::size_t free_orphans(std::uint64_t epoch, bool all) noexcept;
  void check_not_retired(void* object);
  void forget_retired(void* object) noexcept;

  const std::uint64_t id_;
  std::atomic<ReclaimPolicy> policy_;
  const std::size_t threshold_;
  alignas(64) std::atomic<std::uint64_t> epoch_{1};
  std::atomic<Participant*> participants_{nullptr};

  std::mutex orphan_mutex_;
  std::vector<Retired> orphans_;
  std::atomic<std::uint64_t> orphan_freed_{0};
  std::atomic<std::uint64_t> orphan_retired_{0};

  const bool check_retire_;
  std::mutex check_mutex_;
  std::unordered_set<void*> live_retired_;
};

}  // namespace kst

#endif  // KST_RECLAMATION_HPP
