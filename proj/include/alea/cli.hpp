#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "alea/blockmap.hpp"
#include "alea/report.hpp"
#include "alea/trace.hpp"

namespace alea::cli {

/// Process exit status. Each failure mode has its own code.
enum ExitCode : int {
  ok = 0,
  internal = 1,
  usage = 2,
  attach_failed = 3,
  sensor_failed = 4,
  blockmap_failed = 5,
  target_crashed = 6,  // the report is still written
  malformed_input = 7,
  output_failed = 8,
};

struct RunConfig {
  std::string subcommand;
  std::vector<std::string> command;  // spawn mode
  std::optional<int> pid;            // attach mode
  std::vector<std::string> blockmaps;
  std::string power_source = "none";
  double period_ms = 10.0;
  double jitter = 0.05;
  bool no_jitter = false;
  double alpha = 0.05;
  std::string granularity = "combination";
  std::optional<std::string> domain;
  std::optional<std::string> record;
  std::optional<std::string> output;
  std::optional<std::string> format;
  std::optional<int> pin_core;
  std::optional<double> max_duration_s;
  std::optional<std::uint64_t> seed;
  std::uint64_t min_samples = 0;
  std::string input;  // replay trace or simulate scenario
  std::size_t replications = 0;
  std::optional<std::string> export_trace;
  std::optional<std::string> export_blockmap;
};

/// Same trace -> report path for live runs and replays.
Report report_from_trace(const Trace& trace, std::vector<BlockMap> maps, const ReportSettings& settings);

/// Runs one command line (without the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace alea::cli
