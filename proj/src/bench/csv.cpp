#include "kst/bench/csv.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace kst::bench {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string fmt(T v) {
  return std::to_string(v);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in{line};
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
bool parse(const std::string& s, T& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

bool parse(const std::string& s, bool& out) {
  if (s == "1") out = true;
  else if (s == "0") out = false;
  else return false;
  return true;
}

bool parse(const std::string& s, double& out) {
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return !s.empty() && end == s.c_str() + s.size();
}

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "structure",       "preset",         "k",
      "threads",         "trial",          "duration_s",
      "insert_pct",      "delete_pct",     "rq_pct",
      "range_size",      "key_lo",         "key_hi",
      "seed",            "rq_copy_keys",   "total_ops",
      "inserts",         "deletes",        "finds",
      "range_queries",   "throughput_ops_s", "rq_retry_1",
      "rq_retry_2_3",    "rq_retry_4_7",   "rq_retry_8_plus",
      "initial_size",    "final_size",     "mean_range_size",
      "expected_range_size"};
  return cols;
}

std::string csv_header() {
  std::string s;
  for (const auto& c : csv_columns()) s += (s.empty() ? "" : ",") + c;
  return s;
}

std::string csv_row(const TrialResult& r) {
  const WorkloadSpec& w = r.spec;
  const std::string cells[] = {
      std::string{to_string(r.structure)}, r.preset, fmt(w.k), fmt(w.threads),
      fmt(r.trial), fmt(r.duration_s), fmt(w.insert_pct), fmt(w.delete_pct),
      fmt(w.rq_pct), fmt(w.range_size), fmt(w.key_lo), fmt(w.key_hi),
      fmt(w.seed), w.rq_copy_keys ? "1" : "0", fmt(r.total_ops),
      fmt(r.inserts), fmt(r.deletes), fmt(r.finds), fmt(r.range_queries),
      fmt(r.throughput_ops_s), fmt(r.rq_retries[0]), fmt(r.rq_retries[1]),
      fmt(r.rq_retries[2]), fmt(r.rq_retries[3]), fmt(r.initial_size),
      fmt(r.final_size), fmt(r.mean_range_size()), fmt(r.expected_range_size())};
  std::string s;
  for (const auto& c : cells) s += (&c == cells ? "" : ",") + c;
  return s;
}

void write_csv(std::ostream& out, const std::vector<TrialResult>& results) {
  out << csv_header() << '\n';
  for (const auto& r : results) out << csv_row(r) << '\n';
}

std::optional<std::vector<TrialResult>> read_csv(std::istream& in,
                                                 std::string* error) {
  auto fail = [&](std::size_t line, const std::string& what) {
    if (error) *error = "line " + std::to_string(line) + ": " + what;
    return std::nullopt;
  };
  std::string line;
  if (!std::getline(in, line) || line != csv_header())
    return fail(1, "missing or unexpected header");
  std::vector<TrialResult> out;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != csv_columns().size()) return fail(n, "wrong number of cells");
    TrialResult r;
    WorkloadSpec& w = r.spec;
    if (c[0] == "kst") r.structure = Structure::kst;
    else if (c[0] == "baseline") r.structure = Structure::baseline;
    else return fail(n, "unknown structure '" + c[0] + "'");
    r.preset = c[1];
    double mean = 0, expected = 0;
    std::uint64_t range_queries = 0;
    const bool ok =
        parse(c[2], w.k) && parse(c[3], w.threads) && parse(c[4], r.trial) &&
        parse(c[5], r.duration_s) && parse(c[6], w.insert_pct) &&
        parse(c[7], w.delete_pct) && parse(c[8], w.rq_pct) &&
        parse(c[9], w.range_size) && parse(c[10], w.key_lo) &&
        parse(c[11], w.key_hi) && parse(c[12], w.seed) &&
        parse(c[13], w.rq_copy_keys) && parse(c[14], r.total_ops) &&
        parse(c[15], r.inserts) && parse(c[16], r.deletes) &&
        parse(c[17], r.finds) && parse(c[18], range_queries) &&
        parse(c[19], r.throughput_ops_s) && parse(c[20], r.rq_retries[0]) &&
        parse(c[21], r.rq_retries[1]) && parse(c[22], r.rq_retries[2]) &&
        parse(c[23], r.rq_retries[3]) && parse(c[24], r.initial_size) &&
        parse(c[25], r.final_size) && parse(c[26], mean) &&
        parse(c[27], expected);
    if (!ok) return fail(n, "malformed number");
    r.range_queries = range_queries;
    // The total is not stored; recover it from the mean.
    r.range_keys_total = static_cast<std::uint64_t>(
        mean * static_cast<double>(range_queries) + 0.5);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace kst::bench
