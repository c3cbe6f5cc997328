// kst-bench: throughput of the k-ary search tree and a locked baseline
// under mixed insert/delete/find/range workloads.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kst/bench/csv.hpp"
#include "kst/bench/trial.hpp"
#include "kst/bench/workload.hpp"

using namespace kst::bench;

namespace {

bool parse_keyspace(const std::string& s, kst::Key& lo, kst::Key& hi) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) return false;
  try {
    std::size_t used = 0;
    lo = std::stoll(s.substr(0, colon), &used);
    if (used != colon) return false;
    hi = std::stoll(s.substr(colon + 1), &used);
    return used == s.size() - colon - 1;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark the k-ary search tree against a locked ordered set"};

  WorkloadSpec spec;
  std::vector<std::size_t> threads{1};
  std::vector<std::string> structures{"kst"};
  std::vector<std::string> presets;
  std::string experiment;
  std::string keyspace;
  std::string out_path;
  bool copy_keys = true;

  app.add_option("--preset", presets,
                 "desk:<experiment>, desk:all, or an experiment name; repeatable");
  app.add_option("--experiment", experiment, "mix as xi-yd-zr-sizeS");
  app.add_option("--k", spec.k, "tree arity")->check(CLI::Range(2, 1024));
  app.add_option("--threads", threads, "thread counts to run")->expected(1, -1);
  app.add_option("--duration-s", spec.duration_s, "timed seconds per trial");
  app.add_option("--warmup-s", spec.warmup_s, "untimed seconds before the first trial");
  app.add_option("--insert-pct", spec.insert_pct);
  app.add_option("--delete-pct", spec.delete_pct);
  app.add_option("--rq-pct", spec.rq_pct);
  app.add_option("--range-size", spec.range_size);
  app.add_option("--keyspace", keyspace, "half-open key range lo:hi");
  app.add_option("--trials", spec.trials);
  app.add_option("--seed", spec.seed);
  app.add_option("--ops-per-thread", spec.ops_per_thread,
                 "fixed operation count per thread instead of timed trials");
  app.add_option("--structure", structures, "kst, baseline or both")
      ->check(CLI::IsMember({"kst", "baseline"}))
      ->expected(1, -1);
  app.add_option("--rq-copy-keys", copy_keys,
                 "range queries copy keys (1) or return leaf references (0)");
  app.add_option("--out", out_path, "CSV file; standard output when omitted");

  CLI11_PARSE(app, argc, argv);

  std::vector<std::pair<std::string, WorkloadSpec>> runs;
  auto base = spec;
  base.rq_copy_keys = copy_keys;
  if (!keyspace.empty() && !parse_keyspace(keyspace, base.key_lo, base.key_hi)) {
    std::cerr << "kst-bench: --keyspace expects lo:hi\n";
    return 2;
  }
  if (!experiment.empty()) {
    const auto e = parse_experiment(experiment);
    if (!e) {
      std::cerr << "kst-bench: bad experiment '" << experiment << "'\n";
      return 2;
    }
    apply(base, *e);
  }
  if (presets.empty()) runs.emplace_back("", base);
  for (const auto& name : presets) {
    std::vector<std::string> names{name};
    if (name == "desk:all" || name == "all") {
      names.clear();
      for (const auto& e : reference_experiments())
        names.push_back((name == "all" ? "" : "desk:") + e);
    }
    for (const auto& n : names) {
      WorkloadSpec s = base;
      if (const auto p = preset(n)) {
        // Explicitly given options still apply on top of the preset.
        s = *p;
        s.k = base.k;
        s.seed = base.seed;
        s.rq_copy_keys = base.rq_copy_keys;
        s.ops_per_thread = base.ops_per_thread;
        s.warmup_s = base.warmup_s;
        if (app.count("--duration-s")) s.duration_s = base.duration_s;
        if (app.count("--trials")) s.trials = base.trials;
        if (!keyspace.empty()) {
          s.key_lo = base.key_lo;
          s.key_hi = base.key_hi;
        }
      } else if (const auto e = parse_experiment(n)) {
        apply(s, *e);
      } else {
        std::cerr << "kst-bench: unknown preset '" << n << "'\n";
        return 2;
      }
      runs.emplace_back(n, s);
    }
  }

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      std::cerr << "kst-bench: cannot write " << out_path << "\n";
      return 1;
    }
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  out << csv_header() << '\n';

  int status = 0;
  try {
    for (const auto& [name, s0] : runs) {
      for (const auto& st : structures) {
        for (const std::size_t t : threads) {
          WorkloadSpec s = s0;
          s.threads = t;
          s.validate();
          const Structure structure = st == "kst" ? Structure::kst : Structure::baseline;
          for (const auto& r : run_trials(structure, s, name)) {
            out << csv_row(r) << '\n' << std::flush;
            std::fprintf(stderr, "%s %s k=%zu threads=%zu trial=%zu: %.0f ops/s, size %zu\n",
                         st.c_str(), s.experiment().c_str(), s.k, t, r.trial,
                         r.throughput_ops_s, r.final_size);
            if (!r.structure_error.empty()) {
              std::cerr << "kst-bench: invalid structure after trial\n"
                        << r.structure_error;
              status = 1;
            }
          }
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "kst-bench: " << e.what() << "\n";
    return 1;
  }
  return status;
}
