// Multi-threaded stress run. Each thread owns the keys congruent to its id
// modulo the thread count and checks every result against its own exact
// sequential oracle; range queries span all threads' keys and are checked
// on the owner's residue class. Afterwards the tree must be valid, hold
// exactly the union of the oracles, and memory must be back near the
// footprint after prefill.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <malloc.h>
#include <mutex>
#include <new>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "kst/check/structure.hpp"
#include "kst/kary_tree.hpp"

#if defined(__has_feature)
#if __has_feature(address_sanitizer) || __has_feature(thread_sanitizer)
#define KST_SANITIZED 1
#endif
#endif
#if defined(__SANITIZE_ADDRESS__) || defined(__SANITIZE_THREAD__)
#define KST_SANITIZED 1
#endif

#ifdef KST_SANITIZED
// Provided by the address and thread sanitizer runtimes.
extern "C" std::size_t __sanitizer_get_current_allocated_bytes();
#endif

namespace {

#ifndef KST_SANITIZED
std::atomic<std::size_t> g_allocated{0};
#endif

std::size_t allocated_bytes() {
#ifdef KST_SANITIZED
  return __sanitizer_get_current_allocated_bytes();
#else
  return g_allocated.load();
#endif
}

struct Failure {
  std::mutex mutex;
  std::vector<std::string> messages;
  std::atomic<bool> any{false};

  void add(std::string m) {
    any = true;
    std::lock_guard lock{mutex};
    if (messages.size() < 20) messages.push_back(std::move(m));
  }
};

bool run_once(std::size_t k, std::size_t threads, double seconds, kst::Key keys,
              std::uint64_t seed) {
  using kst::Key;
  const std::size_t before = allocated_bytes();
  std::size_t after_prefill = 0;
  std::size_t after_run = 0;
  std::size_t after_drain = 0;
  Failure failure;
  std::vector<std::set<Key>> oracles(threads);
  std::atomic<std::uint64_t> ops{0};
  std::atomic<std::uint64_t> range_ops{0};
  kst::ReclamationStats stats;
  std::uint64_t pending_at_end = 0;
  {
    kst::EpochDomain domain;
    kst::Tree tree{k, domain};

    // Random insertion order keeps the unbalanced tree shallow.
    std::mt19937_64 rng{seed};
    std::vector<Key> initial;
    for (Key key = 0; key < keys; ++key)
      if (rng() % 2 == 0) initial.push_back(key);
    std::shuffle(initial.begin(), initial.end(), rng);
    for (const Key key : initial) {
      tree.insert(key);
      oracles[static_cast<std::size_t>(key) % threads].insert(key);
    }
    initial = {};
    after_prefill = allocated_bytes();
    {
      const auto r = kst::check::check_structure(tree);
      std::printf("  prefill: %zu keys in %zu internals, %zu leaves\n", r.keys, r.internals, r.leaves);
    }

    std::atomic<bool> stop{false};
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        std::seed_seq seq{seed, static_cast<std::uint64_t>(t)};
        std::mt19937_64 r{seq};
        std::set<Key>& mine = oracles[t];
        const Key slots = keys / static_cast<Key>(threads);
        std::uint64_t n = 0, rq = 0;
        while (!stop.load(std::memory_order_relaxed) && !failure.any) {
          const Key key = static_cast<Key>(r() % static_cast<std::uint64_t>(slots)) *
                              static_cast<Key>(threads) + static_cast<Key>(t);
          const unsigned p = static_cast<unsigned>(r() % 100);
          ++n;
          if (p < 35) {
            const bool want = mine.insert(key).second;
            if (tree.insert(key) != want)
              failure.add("insert " + std::to_string(key) + " returned " + (want ? "false" : "true"));
          } else if (p < 70) {
            const bool want = mine.erase(key) != 0;
            if (tree.erase(key) != want)
              failure.add("delete " + std::to_string(key) + " returned " + (want ? "false" : "true"));
          } else if (p < 85) {
            if (tree.contains(key) != mine.contains(key))
              failure.add("find " + std::to_string(key) + " disagrees with the owner");
          } else {
            ++rq;
            const Key lo = static_cast<Key>(r() % static_cast<std::uint64_t>(keys));
            const Key hi = std::min<Key>(keys - 1, lo + static_cast<Key>(r() % 256));
            const auto got = tree.range_keys(lo, hi);
            std::vector<Key> own;
            for (std::size_t i = 0; i < got.size(); ++i) {
              if (got[i] < lo || got[i] > hi || (i > 0 && got[i - 1] >= got[i])) {
                failure.add("range result out of order or out of bounds");
                break;
              }
              if (static_cast<std::size_t>(got[i]) % threads == t) own.push_back(got[i]);
            }
            const std::vector<Key> want(mine.lower_bound(lo), mine.upper_bound(hi));
            if (own != want)
              failure.add("range [" + std::to_string(lo) + "," + std::to_string(hi) +
                          "] disagrees with the owner's keys");
          }
        }
        ops += n;
        range_ops += rq;
      });
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    stop = true;
    for (auto& w : workers) w.join();
    after_run = allocated_bytes();

    {
      std::set<Key> all;
      for (const auto& o : oracles) all.insert(o.begin(), o.end());
      const auto got = kst::check::collect_keys(tree);
      if (got != std::vector<Key>(all.begin(), all.end()))
        failure.add("final contents differ from the union of the oracles");
      const auto report = kst::check::check_structure(tree);
      if (!report.ok()) failure.add("structure: " + report.describe());
      std::printf("  final: %zu keys in %zu internals, %zu leaves\n", report.keys, report.internals, report.leaves);
    }

    pending_at_end = domain.stats().pending();
    domain.drain_quiescent();
    after_drain = allocated_bytes();
    stats = domain.stats();
  }

  const double prefill_bytes = static_cast<double>(after_prefill) - static_cast<double>(before);
  const double run_ratio = (static_cast<double>(after_run) - static_cast<double>(before)) / prefill_bytes;
  const double drain_ratio = (static_cast<double>(after_drain) - static_cast<double>(before)) / prefill_bytes;
  std::printf("k=%zu threads=%zu %.0fs: %llu ops (%llu range), retired %llu, "
              "%llu awaiting reclamation when threads stopped; memory %.2fx of "
              "prefill when threads stopped, %.2fx after quiescent drain\n",
              k, threads, seconds, static_cast<unsigned long long>(ops.load()),
              static_cast<unsigned long long>(range_ops.load()),
              static_cast<unsigned long long>(stats.retired),
              static_cast<unsigned long long>(pending_at_end), run_ratio, drain_ratio);
  if (stats.freed != stats.retired)
    failure.add("retired objects were not all freed");
  // Reclamation keeps up during the run: most retired objects are already
  // gone when the threads stop.
  if (pending_at_end * 10 > stats.retired)
    failure.add("more than a tenth of retired objects were still unreclaimed");
  if (!(drain_ratio <= 2.0))
    failure.add("memory did not return to within 2x of the prefill footprint");
  for (const auto& m : failure.messages) std::printf("  FAIL: %s\n", m.c_str());
  return !failure.any;
}

}  // namespace

#ifndef KST_SANITIZED
// Heap accounting for the plain build; the sanitizer runtimes keep their own.
void* operator new(std::size_t n) {
  void* p = std::malloc(n == 0 ? 1 : n);
  if (p == nullptr) throw std::bad_alloc{};
  g_allocated += malloc_usable_size(p);
  return p;
}
void* operator new[](std::size_t n) { return ::operator new(n); }
void operator delete(void* p) noexcept {
  if (p == nullptr) return;
  g_allocated -= malloc_usable_size(p);
  std::free(p);
}
void operator delete[](void* p) noexcept { ::operator delete(p); }
void operator delete(void* p, std::size_t) noexcept { ::operator delete(p); }
void operator delete[](void* p, std::size_t) noexcept { ::operator delete(p); }
#endif

int main(int argc, char** argv) {
  CLI::App app{"Concurrent stress test of the k-ary search tree"};
  std::vector<std::size_t> arities{2, 4, 16};
  std::size_t threads = 8;
  double seconds = 30;
  kst::Key keys = 1 << 14;
  std::uint64_t seed = 1;
  app.add_option("--k", arities)->expected(1, -1);
  app.add_option("--threads", threads)->check(CLI::Range(1, 256));
  app.add_option("--seconds", seconds, "duration per arity");
  app.add_option("--keys", keys, "key space size");
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  bool ok = true;
  for (const std::size_t k : arities) ok = run_once(k, threads, seconds, keys, seed) && ok;
  std::printf("%s\n", ok ? "stress: clean" : "stress: FAILED");
  return ok ? 0 : 1;
}
