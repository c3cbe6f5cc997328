#include "kst/reclamation.hpp"

#include <cassert>
#include <cstdio>
#include <cstdlib>
#include <unordered_map>
#include <utility>

namespace kst {

namespace detail {

struct alignas(64) EpochParticipant {
  // (epoch << 1) | active
  std::atomic<std::uint64_t> announced{0};
  std::atomic<bool> in_use{true};
  EpochParticipant* next = nullptr;

  // Owner thread only.
  unsigned nesting = 0;
  std::vector<EpochDomain::Retired> limbo;
  std::atomic<std::uint64_t> retired{0};
  std::atomic<std::uint64_t> freed{0};

  void count_freed(std::size_t n) noexcept {
    freed.store(freed.load(std::memory_order_relaxed) + n,
                std::memory_order_relaxed);
  }
};

}  // namespace detail

namespace {

constexpr std::uint64_t kActive = 1;

struct DomainRegistry {
  std::mutex mutex;
  std::unordered_map<std::uint64_t, EpochDomain*> live;
  std::uint64_t next_id = 1;
};

DomainRegistry& registry() {
  static DomainRegistry r;
  return r;
}

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

EpochDomain::ViolationHandler& violation_handler() {
  static EpochDomain::ViolationHandler h;
  return h;
}

void report_violation(const char* what) {
  EpochDomain::ViolationHandler h;
  {
    std::lock_guard lock{handler_mutex()};
    h = violation_handler();
  }
  if (h) {
    h(what);
    return;
  }
  std::fprintf(stderr, "kst reclamation contract violation: %s\n", what);
  std::abort();
}

thread_local bool t_cache_destroyed = false;

}  // namespace

struct ThreadCache {
  struct Entry {
    std::uint64_t domain_id;
    detail::EpochParticipant* participant;
  };
  std::vector<Entry> entries;

  ThreadCache() = default;
  ThreadCache(const ThreadCache&) = delete;
  ThreadCache& operator=(const ThreadCache&) = delete;

  ~ThreadCache() {
    auto& reg = registry();
    std::lock_guard lock{reg.mutex};
    for (const auto& e : entries) {
      const auto it = reg.live.find(e.domain_id);
      if (it != reg.live.end()) it->second->release_participant(*e.participant);
    }
    entries.clear();
    t_cache_destroyed = true;
  }

  void prune_dead() {
    auto& reg = registry();
    std::lock_guard lock{reg.mutex};
    std::erase_if(entries, [&](const Entry& e) {
      return reg.live.find(e.domain_id) == reg.live.end();
    });
  }
};

namespace {
thread_local ThreadCache t_cache;
}  // namespace

void Guard::reset() noexcept {
  if (domain_ == nullptr) return;
  domain_->unpin(*participant_);
  domain_ = nullptr;
  participant_ = nullptr;
}

EpochDomain::EpochDomain(ReclaimPolicy policy, std::size_t threshold,
                         bool check_retire)
    : id_{[this] {
        auto& reg = registry();
        std::lock_guard lock{reg.mutex};
        const auto id = reg.next_id++;
        reg.live.emplace(id, this);
        return id;
      }()},
      policy_{policy},
      threshold_{threshold},
      check_retire_{check_retire} {}

EpochDomain::~EpochDomain() {
  {
    auto& reg = registry();
    std::lock_guard lock{reg.mutex};
    reg.live.erase(id_);
  }
  if (!t_cache_destroyed) {
    std::erase_if(t_cache.entries, [this](const ThreadCache::Entry& e) {
      return e.domain_id == id_;
    });
  }
  Participant* p = participants_.load(std::memory_order_acquire);
  while (p != nullptr) {
    assert((p->announced.load(std::memory_order_relaxed) & kActive) == 0);
    for (const auto& r : p->limbo) r.deleter(r.object);
    Participant* next = p->next;
    delete p;
    p = next;
  }
  for (const auto& r : orphans_) r.deleter(r.object);
}

EpochDomain& EpochDomain::global() {
  static EpochDomain domain;
  return domain;
}

void EpochDomain::set_violation_handler(ViolationHandler handler) {
  std::lock_guard lock{handler_mutex()};
  violation_handler() = std::move(handler);
}

EpochDomain::Participant& EpochDomain::local() {
  for (const auto& e : t_cache.entries)
    if (e.domain_id == id_) return *e.participant;
  if (t_cache.entries.size() >= 16) t_cache.prune_dead();
  Participant& p = acquire_participant();
  t_cache.entries.push_back({id_, &p});
  return p;
}

EpochDomain::Participant& EpochDomain::acquire_participant() {
  for (Participant* p = participants_.load(std::memory_order_acquire);
       p != nullptr; p = p->next) {
    bool expected = false;
    if (!p->in_use.load(std::memory_order_relaxed) &&
        p->in_use.compare_exchange_strong(expected, true,
                                          std::memory_order_acquire))
      return *p;
  }
  auto* p = new Participant{};
  Participant* head = participants_.load(std::memory_order_relaxed);
  do {
    p->next = head;
  } while (!participants_.compare_exchange_weak(
      head, p, std::memory_order_release, std::memory_order_relaxed));
  return *p;
}

void EpochDomain::release_participant(Participant& p) noexcept {
  assert(p.nesting == 0);
  if (!p.limbo.empty()) {
    std::lock_guard lock{orphan_mutex_};
    orphans_.insert(orphans_.end(), p.limbo.begin(), p.limbo.end());
    p.limbo.clear();
    p.limbo.shrink_to_fit();
  }
  p.announced.store(0, std::memory_order_release);
  p.in_use.store(false, std::memory_order_release);
}

Guard EpochDomain::pin() {
  Participant& p = local();
  if (p.nesting++ == 0) {
    const auto e = epoch_.load(std::memory_order_seq_cst);
    p.announced.store((e << 1) | kActive, std::memory_order_seq_cst);
    // Announcement must be visible before any shared pointer is read.
    std::atomic_thread_fence(std::memory_order_seq_cst);
  }
  return Guard{this, &p};
}

void EpochDomain::unpin(Participant& p) noexcept {
  assert(p.nesting > 0);
  if (--p.nesting != 0) return;
  const auto announced = p.announced.load(std::memory_order_relaxed);
  p.announced.store(announced & ~kActive, std::memory_order_release);
  switch (policy()) {
    case ReclaimPolicy::eager:
      collect_local(p);
      break;
    case ReclaimPolicy::threshold:
      if (p.limbo.size() >= threshold_) collect_local(p);
      break;
    case ReclaimPolicy::never:
      break;
  }
}

bool EpochDomain::pinned_by_this_thread() { return local().nesting > 0; }

void EpochDomain::retire(void* object, Deleter deleter) {
  assert(object != nullptr);
  if (check_retire_) check_not_retired(object);
  Participant& p = local();
  p.limbo.push_back({object, deleter, epoch_.load(std::memory_order_seq_cst)});
  p.retired.store(p.retired.load(std::memory_order_relaxed) + 1,
                  std::memory_order_relaxed);
}

bool EpochDomain::try_advance() {
  auto e = epoch_.load(std::memory_order_seq_cst);
  for (Participant* p = participants_.load(std::memory_order_acquire);
       p != nullptr; p = p->next) {
    const auto s = p->announced.load(std::memory_order_seq_cst);
    if ((s & kActive) != 0 && (s >> 1) != e) return false;
  }
  epoch_.compare_exchange_strong(e, e + 1, std::memory_order_seq_cst);
  return true;
}

std::size_t EpochDomain::free_eligible(std::vector<Retired>& list,
                                       std::uint64_t epoch) noexcept {
  // Retire epochs are non-decreasing along the list.
  std::size_t n = 0;
  while (n < list.size() && list[n].epoch + kGracePeriods <= epoch) ++n;
  for (std::size_t i = 0; i < n; ++i) {
    if (check_retire_) forget_retired(list[i].object);
    list[i].deleter(list[i].object);
  }
  list.erase(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(n));
  return n;
}

std::size_t EpochDomain::free_orphans(std::uint64_t epoch, bool all) noexcept {
  std::unique_lock lock{orphan_mutex_, std::try_to_lock};
  if (!lock.owns_lock() || orphans_.empty()) return 0;
  std::size_t n = 0;
  std::erase_if(orphans_, [&](const Retired& r) {
    if (!all && r.epoch + kGracePeriods > epoch) return false;
    if (check_retire_) forget_retired(r.object);
    r.deleter(r.object);
    ++n;
    return true;
  });
  orphan_freed_.fetch_add(n, std::memory_order_relaxed);
  return n;
}

void EpochDomain::collect_local(Participant& p) noexcept {
  try_advance();
  const auto e = epoch_.load(std::memory_order_acquire);
  p.count_freed(free_eligible(p.limbo, e));
  free_orphans(e, false);
}

std::size_t EpochDomain::collect() {
  Participant& p = local();
  try_advance();
  const auto e = epoch_.load(std::memory_order_acquire);
  const auto n = free_eligible(p.limbo, e);
  p.count_freed(n);
  return n + free_orphans(e, false);
}

std::size_t EpochDomain::drain_quiescent() {
  std::size_t n = 0;
  for (Participant* p = participants_.load(std::memory_order_acquire);
       p != nullptr; p = p->next) {
    assert((p->announced.load(std::memory_order_acquire) & kActive) == 0);
    for (const auto& r : p->limbo) {
      if (check_retire_) forget_retired(r.object);
      r.deleter(r.object);
    }
    p->count_freed(p->limbo.size());
    n += p->limbo.size();
    p->limbo.clear();
    p->limbo.shrink_to_fit();
  }
  std::lock_guard lock{orphan_mutex_};
  for (const auto& r : orphans_) {
    if (check_retire_) forget_retired(r.object);
    r.deleter(r.object);
  }
  n += orphans_.size();
  orphan_freed_.fetch_add(orphans_.size(), std::memory_order_relaxed);
  orphans_.clear();
  orphans_.shrink_to_fit();
  epoch_.fetch_add(kGracePeriods, std::memory_order_seq_cst);
  return n;
}

ReclamationStats EpochDomain::stats() const {
  ReclamationStats s;
  for (Participant* p = participants_.load(std::memory_order_acquire);
       p != nullptr; p = p->next) {
    s.retired += p->retired.load(std::memory_order_relaxed);
    s.freed += p->freed.load(std::memory_order_relaxed);
  }
  s.freed += orphan_freed_.load(std::memory_order_relaxed);
  s.epoch = epoch_.load(std::memory_order_relaxed);
  return s;
}

void EpochDomain::check_not_retired(void* object) {
  bool duplicate = false;
  {
    std::lock_guard lock{check_mutex_};
    duplicate = !live_retired_.insert(object).second;
  }
  if (duplicate) report_violation("object retired twice");
}

void EpochDomain::forget_retired(void* object) noexcept {
  std::lock_guard lock{check_mutex_};
  live_retired_.erase(object);
}

}  // namespace kst
