#ifndef KST_BENCH_CSV_HPP
#define KST_BENCH_CSV_HPP

/// \file
/// CSV output of trial results, one row per (structure, spec, threads,
/// trial), and a reader for the same format.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kst/bench/trial.hpp"

namespace kst::bench {

[[nodiscard]] const std::vector<std::string>& csv_columns();
[[nodiscard]] std::string csv_header();
[[nodiscard]] std::string csv_row(const TrialResult& r);
void write_csv(std::ostream& out, const std::vector<TrialResult>& results);

/// Reads a file written by write_csv. Returns nullopt on a malformed file
/// and sets `error` when given.
[[nodiscard]] std::optional<std::vector<TrialResult>> read_csv(
    std::istream& in, std::string* error = nullptr);

}  // namespace kst::bench

#endif  // KST_BENCH_CSV_HPP
