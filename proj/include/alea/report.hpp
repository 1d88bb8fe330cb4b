#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "alea/blockmap.hpp"
#include "alea/model.hpp"
#include "alea/trace.hpp"

namespace alea {

enum class ReportFormat { json, csv, text };

/// Settings echoed into the report. Only what shapes the numbers goes here, so a
/// replay with the same settings reproduces a live report byte for byte.
struct ReportSettings {
  double alpha = 0.05;
  Granularity granularity = Granularity::combination;
  std::optional<PowerDomain> domain;
};

struct ReportRow {
  std::string label;
  std::vector<std::string> key;  // "module:block", "module:unknown", "unknown" or "absent" per slot
  BlockEstimate estimate;
  double edp = 0.0;   // e * t
  double ed2p = 0.0;  // e * t^2
  bool unknown = false;
};

struct UnsampledRow {
  std::string label;
  BlockKey key;
};

struct DomainRow {
  std::string domain;
  double estimated_j = 0.0;
  double integrated_j = 0.0;
  std::uint64_t usable_readings = 0;

  double discrepancy_j() const { return estimated_j - integrated_j; }
};

struct Report {
  ReportSettings settings;
  TraceMeta meta;
  double t_exec_s = 0.0;
  bool t_exec_measured = true;
  std::uint64_t n = 0;
  std::size_t thread_slots = 0;
  std::optional<std::string> power_domain;
  std::uint64_t flagged_readings = 0;
  std::vector<ReportRow> rows;  // by energy, then time, descending
  std::vector<UnsampledRow> unsampled;
  std::vector<DomainRow> domains;

  double total_p() const;
  double total_t() const;
  double total_e() const;
};

Report make_report(const Profile& profile, const Symbolizer& symbols, const TraceMeta& meta, bool t_exec_measured,
                   const ReportSettings& settings);

std::string render_json(const Report& report);
std::string render_csv(const Report& report);
/// Rows with fewer than `min_samples` samples are left out and counted in a note.
std::string render_text(const Report& report, std::uint64_t min_samples = 0);
std::string render(const Report& report, ReportFormat format, std::uint64_t min_samples = 0);

ReportFormat parse_report_format(std::string_view name);
const char* to_string(ReportFormat format);
const char* to_string(Granularity granularity);

}  // namespace alea
