#include "kst/bench/workload.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace kst::bench {

namespace {

std::string format_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size() && out >= 0;
}

}  // namespace

std::string WorkloadSpec::experiment() const {
  return format_pct(insert_pct) + "i-" + format_pct(delete_pct) + "d-" +
         format_pct(rq_pct) + "r-size" + std::to_string(range_size);
}

void WorkloadSpec::validate() const {
  auto bad_pct = [](double v) { return !std::isfinite(v) || v < 0 || v > 100; };
  if (bad_pct(insert_pct) || bad_pct(delete_pct) || bad_pct(rq_pct) ||
      insert_pct + delete_pct + rq_pct > 100)
    throw ConfigError{"operation percentages must be in [0,100] and sum to at most 100"};
  if (range_size < 1) throw ConfigError{"range size must be at least 1"};
  if (key_lo >= key_hi) throw ConfigError{"key space must be nonempty"};
  if (key_lo < 0)
    throw ConfigError{"key space must start at a non-negative key"};
  if (threads < 1) throw ConfigError{"need at least one thread"};
  if (ops_per_thread == 0 && !(duration_s > 0))
    throw ConfigError{"duration must be positive"};
  if (warmup_s < 0) throw ConfigError{"warm-up must not be negative"};
  if (k < kMinArity || k > kMaxArity)
    throw ConfigError{"arity out of range"};
}

std::optional<Experiment> parse_experiment(std::string_view name) {
  Experiment e;
  double* fields[] = {&e.insert_pct, &e.delete_pct, &e.rq_pct};
  const char suffix[] = {'i', 'd', 'r'};
  for (int i = 0; i < 3; ++i) {
    const auto dash = name.find('-');
    if (dash == std::string_view::npos || dash == 0) return std::nullopt;
    const std::string_view part = name.substr(0, dash);
    if (part.back() != suffix[i]) return std::nullopt;
    if (!parse_number(part.substr(0, part.size() - 1), *fields[i]))
      return std::nullopt;
    name.remove_prefix(dash + 1);
  }
  if (!name.starts_with("size")) return std::nullopt;
  name.remove_prefix(4);
  const auto [p, ec] =
      std::from_chars(name.data(), name.data() + name.size(), e.range_size);
  if (ec != std::errc{} || p != name.data() + name.size() || e.range_size == 0)
    return std::nullopt;
  if (e.insert_pct + e.delete_pct + e.rq_pct > 100) return std::nullopt;
  return e;
}

void apply(WorkloadSpec& spec, const Experiment& e) {
  spec.insert_pct = e.insert_pct;
  spec.delete_pct = e.delete_pct;
  spec.rq_pct = e.rq_pct;
  spec.range_size = e.range_size;
}

const std::vector<std::string>& reference_experiments() {
  static const std::vector<std::string> names{
      "5i-5d-40r-size10000", "5i-5d-40r-size100", "20i-20d-1r-size10000",
      "20i-20d-1r-size100"};
  return names;
}

std::optional<WorkloadSpec> preset(std::string_view name) {
  if (!name.starts_with("desk:")) return std::nullopt;
  name.remove_prefix(5);
  bool known = false;
  for (const auto& n : reference_experiments()) known = known || n == name;
  if (!known) return std::nullopt;
  WorkloadSpec spec;
  apply(spec, *parse_experiment(name));
  spec.key_lo = 0;
  spec.key_hi = 10'000;
  spec.duration_s = 1;
  spec.trials = 3;
  return spec;
}

}  // namespace kst::bench
