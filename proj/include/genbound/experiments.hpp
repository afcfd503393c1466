#pragma once

// Batch experiment runner: flat key=value configs, cartesian parameter
// grids, deterministic parallel execution, and CSV/JSON emission with
// round-trip-exact floats.
//
// Every row carries the uniform comparator `pass <=> measured <= theoretical
// + slack`, with slack emitted as an ordinary parameter column so each flag
// is recomputable from the row alone.

#include "genbound/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace genbound {

enum class ExperimentKind {
  bounds_eval,
  covering_verify,
  maurey_verify,
  rademacher_verify,
  decay_study,
  compare_trauger,
  gap_study,
};

enum class OutputFormat { csv, json };

ExperimentKind parse_experiment(const std::string& name);  // ConfigError on unknown
const char* experiment_name(ExperimentKind kind);
OutputFormat parse_format(const std::string& name);
const char* format_name(OutputFormat format);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::bounds_eval;
  // axes in file order; each key must belong to the experiment's schema
  std::vector<std::pair<std::string, std::vector<std::string>>> grid;
  std::vector<std::uint64_t> seeds;
  std::string output_path;  // empty: no file written
  OutputFormat format = OutputFormat::csv;
  bool timings = false;  // off: runtime_ms emitted as 0 so reruns are byte-identical
};

// Parses `key = value` lines (comma-separated lists, # comments).  The
// reserved keys seeds/out/format/timings/experiment fill the struct fields;
// everything else becomes a grid axis in file order.  ConfigError on
// malformed lines or an experiment key that contradicts `kind`; IoError on
// unreadable files.
ExperimentConfig load_config(const std::string& path, ExperimentKind kind);

struct ResultRow {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> params;  // ordered columns
  double measured = 0.0;
  double theoretical = 0.0;
  bool pass = true;
  double runtime_ms = 0.0;
};

bool all_pass(const std::vector<ResultRow>& rows);

// Runs the configured suite over grid x seeds.  Grid points execute in
// parallel (capped by GENBOUND_THREADS) and rows come back in grid order:
// axes vary with the first config key slowest and the seed fastest.  Writes
// output_path when set.
std::vector<ResultRow> run(const ExperimentConfig& config);

// 17-significant-digit form; parses back to the identical double
std::string format_double(double v);

void emit(const std::vector<ResultRow>& rows, OutputFormat format, const std::string& path);
std::string emit_string(const std::vector<ResultRow>& rows, OutputFormat format);

// Inverse of emit, for round-trip tests.
std::vector<ResultRow> parse_results(const std::string& text, OutputFormat format);

}  // namespace genbound
