#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alea/blockmap.hpp"
#include "alea/model.hpp"
#include "alea/power.hpp"

namespace alea {

struct ThreadIp {
  int tid = 0;
  std::uint64_t ip = 0;
  friend bool operator==(const ThreadIp&, const ThreadIp&) = default;
};

/// One synchronized observation before symbolization.
struct RawSample {
  std::uint64_t seq = 0;
  std::int64_t wall_time_ns = 0;
  std::vector<ThreadIp> threads;  // only threads that were stopped and read
  PowerSample power;
  std::int64_t stop_ns = 0;       // time the target spent suspended (not serialized)

  friend bool operator==(const RawSample& a, const RawSample& b) {
    return a.seq == b.seq && a.wall_time_ns == b.wall_time_ns && a.threads == b.threads && a.power == b.power;
  }
};

enum class TargetOutcome { exited, crashed, running, unknown };

/// Run-level facts a report needs but the sample lines do not carry.
struct TraceMeta {
  std::optional<std::int64_t> t_exec_ns;
  std::int64_t period_ns = 0;
  double jitter = 0.0;         // bound as a fraction of the period
  std::string power_source;
  std::string executable;      // main binary of the target, for symbol fallback
  std::int64_t stop_ns = 0;    // cumulative target suspension
  std::int64_t spacing_min_ns = 0;
  std::int64_t spacing_max_ns = 0;
  double spacing_mean_ns = 0.0;
  double spacing_sd_ns = 0.0;
  std::int64_t lateness_max_ns = 0;  // worst delay past the scheduled instant
  TargetOutcome outcome = TargetOutcome::unknown;
  int exit_code = 0;
  bool partial = false;
  std::vector<ModuleMapping> mappings;
};

struct Trace {
  TraceMeta meta;
  std::vector<RawSample> samples;
};

// Sample-trace line: seq,wall_time_ns,tid:ip_hex[;tid:ip_hex...],domain=watts[;domain=watts...]
std::string format_sample_line(const RawSample& sample);
RawSample parse_sample_line(std::string_view line);

/// Metadata lines start with "#! ", plain '#' lines are comments.
void write_trace_header(std::ostream& out, const TraceMeta& meta);
void write_trace_footer(std::ostream& out, const TraceMeta& meta);
void write_trace(std::ostream& out, const Trace& trace);

/// Parse errors carry the line number. An empty trace is a parse error.
Trace read_trace(std::istream& in);
Trace read_trace(const std::filesystem::path& path);

const char* to_string(TargetOutcome outcome);

/// Symbolizes each sample into a CombinationKey. Thread slots are assigned in
/// order of first appearance; a thread missing from a sample fills ABSENT.
std::vector<SampleRecord> to_records(const std::vector<RawSample>& samples, const Symbolizer& symbols);

/// t_exec from metadata, else reconstructed as last wall time plus the mean
/// spacing (flagged in reports).
struct ExecTime {
  double seconds = 0.0;
  bool measured = false;
};
ExecTime exec_time(const Trace& trace);

}  // namespace alea
