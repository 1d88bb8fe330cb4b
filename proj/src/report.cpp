#include "alea/report.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "alea/error.hpp"
#include "alea/format.hpp"

namespace alea {

namespace {

using ojson = nlohmann::ordered_json;

std::string key_part(BlockKey k) {
  if (k.is_absent()) return "absent";
  if (k.is_unknown()) return k.module == BlockKey::kNoModule ? "unknown" : std::to_string(k.module) + ":unknown";
  return std::to_string(k.module) + ":" + std::to_string(k.block);
}

ojson interval(const Interval& i) { return ojson::array({i.lower, i.upper}); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << std::scientific << v;
  return os.str();
}

const char* attribution(const Report& r) {
  return r.settings.granularity == Granularity::block && r.thread_slots > 1 ? "shared-resource attribution"
                                                                            : "per-key";
}

}  // namespace

const char* to_string(ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return "json";
    case ReportFormat::csv: return "csv";
    case ReportFormat::text: return "text";
  }
  return "json";
}

const char* to_string(Granularity granularity) {
  return granularity == Granularity::block ? "block" : "combination";
}

ReportFormat parse_report_format(std::string_view name) {
  for (auto f : {ReportFormat::json, ReportFormat::csv, ReportFormat::text})
    if (name == to_string(f)) return f;
  throw Error(ErrorKind::invalid_input, "unknown report format '" + std::string(name) + "'");
}

double Report::total_p() const {
  double s = 0.0;
  for (const auto& r : rows) s += r.estimate.p_hat;
  return s;
}

double Report::total_t() const {
  double s = 0.0;
  for (const auto& r : rows) s += r.estimate.t_hat;
  return s;
}

double Report::total_e() const {
  double s = 0.0;
  for (const auto& r : rows) s += r.estimate.e_hat;
  return s;
}

Report make_report(const Profile& profile, const Symbolizer& symbols, const TraceMeta& meta, bool t_exec_measured,
                   const ReportSettings& settings) {
  Report r;
  r.settings = settings;
  r.meta = meta;
  r.t_exec_s = profile.t_exec_s;
  r.t_exec_measured = t_exec_measured;
  r.n = profile.n;
  r.thread_slots = profile.thread_slots;
  if (profile.domain) r.power_domain = profile.domain->name();
  r.flagged_readings = profile.flagged_readings;

  for (const auto& e : profile.estimates) {
    ReportRow row;
    row.label = symbols.label(e.key);
    for (auto k : e.key.blocks) {
      row.key.push_back(key_part(k));
      row.unknown = row.unknown || k.is_unknown();
    }
    row.estimate = e;
    row.edp = e.e_hat * e.t_hat;
    row.ed2p = e.e_hat * e.t_hat * e.t_hat;
    r.rows.push_back(std::move(row));
  }
  std::stable_sort(r.rows.begin(), r.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.estimate.e_hat != b.estimate.e_hat) return a.estimate.e_hat > b.estimate.e_hat;
    return a.estimate.n_k > b.estimate.n_k;
  });
  for (auto k : profile.unsampled) r.unsampled.push_back({symbols.label(k), k});
  for (const auto& d : profile.domain_totals)
    r.domains.push_back({d.domain.name(), d.estimated_energy_j, d.integrated_energy_j, d.usable_readings});
  return r;
}

std::string render_json(const Report& r) {
  ojson j;
  j["format_version"] = 1;
  j["settings"] = {{"alpha", r.settings.alpha},
                   {"granularity", to_string(r.settings.granularity)},
                   {"power_domain", r.settings.domain ? ojson(r.settings.domain->name()) : ojson(nullptr)}};

  ojson run;
  run["t_exec_s"] = r.t_exec_s;
  run["t_exec_measured"] = r.t_exec_measured;
  run["samples"] = r.n;
  run["thread_slots"] = r.thread_slots;
  run["period_ns"] = r.meta.period_ns;
  run["jitter"] = r.meta.jitter;
  run["power_source"] = r.meta.power_source;
  run["power_domain"] = r.power_domain ? ojson(*r.power_domain) : ojson(nullptr);
  run["power_attribution"] = attribution(r);
  run["flagged_readings"] = r.flagged_readings;
  run["outcome"] = to_string(r.meta.outcome);
  run["exit_code"] = r.meta.exit_code;
  run["partial"] = r.meta.partial;
  const double t_ns = r.t_exec_s * 1e9;
  run["overhead"] = {{"stop_ns", r.meta.stop_ns},
                     {"fraction", t_ns > 0.0 ? static_cast<double>(r.meta.stop_ns) / t_ns : 0.0},
                     {"spacing_min_ns", r.meta.spacing_min_ns},
                     {"spacing_max_ns", r.meta.spacing_max_ns},
                     {"spacing_mean_ns", r.meta.spacing_mean_ns},
                     {"spacing_sd_ns", r.meta.spacing_sd_ns},
                     {"lateness_max_ns", r.meta.lateness_max_ns}};
  j["run"] = std::move(run);

  ojson rows = ojson::array();
  for (const auto& row : r.rows) {
    const auto& e = row.estimate;
    rows.push_back({{"label", row.label},
                    {"key", row.key},
                    {"unknown", row.unknown},
                    {"samples", e.n_k},
                    {"power_samples", e.power_n},
                    {"proportion", e.p_hat},
                    {"proportion_ci", interval(e.p_ci)},
                    {"time_s", e.t_hat},
                    {"time_ci", interval(e.t_ci)},
                    {"power_w", e.pow_hat},
                    {"power_sd", e.pow_s},
                    {"power_ci", interval(e.pow_ci)},
                    {"energy_j", e.e_hat},
                    {"energy_ci", interval(e.e_ci)},
                    {"edp", row.edp},
                    {"ed2p", row.ed2p},
                    {"ci_valid", e.ci_valid},
                    {"power_ci_computable", e.pow_ci_computable}});
  }
  j["blocks"] = std::move(rows);

  ojson unsampled = ojson::array();
  for (const auto& u : r.unsampled) unsampled.push_back({{"label", u.label}, {"key", key_part(u.key)}});
  j["unsampled"] = std::move(unsampled);

  ojson domains = ojson::array();
  for (const auto& d : r.domains)
    domains.push_back({{"domain", d.domain},
                       {"estimated_j", d.estimated_j},
                       {"integrated_j", d.integrated_j},
                       {"discrepancy_j", d.discrepancy_j()},
                       {"usable_readings", d.usable_readings}});
  j["totals"] = {{"proportion", r.total_p()}, {"time_s", r.total_t()}, {"energy_j", r.total_e()},
                 {"domains", std::move(domains)}};
  return j.dump(2) + "\n";
}

std::string render_csv(const Report& r) {
  std::string out =
      "label,key,samples,proportion,proportion_lo,proportion_hi,time_s,time_lo,time_hi,power_w,power_sd,power_lo,"
      "power_hi,energy_j,energy_lo,energy_hi,edp,ed2p,ci_valid,power_ci_computable\n";
  auto num = [](double v) { return fmt::shortest(v); };
  for (const auto& row : r.rows) {
    const auto& e = row.estimate;
    std::string key;
    for (std::size_t i = 0; i < row.key.size(); ++i) key += (i ? "|" : "") + row.key[i];
    out += csv_field(row.label) + ',' + csv_field(key) + ',' + std::to_string(e.n_k) + ',' + num(e.p_hat) + ',' +
           num(e.p_ci.lower) + ',' + num(e.p_ci.upper) + ',' + num(e.t_hat) + ',' + num(e.t_ci.lower) + ',' +
           num(e.t_ci.upper) + ',' + num(e.pow_hat) + ',' + num(e.pow_s) + ',' + num(e.pow_ci.lower) + ',' +
           num(e.pow_ci.upper) + ',' + num(e.e_hat) + ',' + num(e.e_ci.lower) + ',' + num(e.e_ci.upper) + ',' +
           num(row.edp) + ',' + num(row.ed2p) + ',' + (e.ci_valid ? "true" : "false") + ',' +
           (e.pow_ci_computable ? "true" : "false") + '\n';
  }
  for (const auto& u : r.unsampled)
    out += csv_field(u.label) + ',' + csv_field(key_part(u.key)) + ",0,0,,,0,,,,,,,0,,,0,0,false,false\n";
  return out;
}

std::string render_text(const Report& r, std::uint64_t min_samples) {
  std::ostringstream os;
  os << "execution time  " << fmt::fixed(r.t_exec_s, 6) << " s" << (r.t_exec_measured ? "" : " (reconstructed)")
     << '\n';
  os << "samples         " << r.n << " over " << r.thread_slots << " thread slot" << (r.thread_slots == 1 ? "" : "s")
     << ", alpha " << fmt::shortest(r.settings.alpha) << ", " << to_string(r.settings.granularity) << " granularity\n";
  if (r.meta.period_ns > 0)
    os << "period          " << fmt::fixed(static_cast<double>(r.meta.period_ns) * 1e-6, 3) << " ms, jitter "
       << fmt::shortest(r.meta.jitter) << '\n';
  const double t_ns = r.t_exec_s * 1e9;
  os << "overhead        " << fmt::fixed(t_ns > 0 ? 100.0 * static_cast<double>(r.meta.stop_ns) / t_ns : 0.0, 3)
     << " % (" << r.meta.stop_ns << " ns suspended)\n";
  os << "power           " << (r.power_domain ? *r.power_domain : std::string("none"));
  if (!r.meta.power_source.empty()) os << " from " << r.meta.power_source;
  if (r.flagged_readings > 0) os << ", " << r.flagged_readings << " flagged readings";
  if (r.settings.granularity == Granularity::block && r.thread_slots > 1) os << ", " << attribution(r);
  os << '\n';
  os << "outcome         " << to_string(r.meta.outcome);
  if (r.meta.outcome == TargetOutcome::exited || r.meta.outcome == TargetOutcome::crashed)
    os << " (code " << r.meta.exit_code << ')';
  if (r.meta.partial) os << ", partial";
  os << "\n\n";

  std::vector<std::vector<std::string>> table;
  table.push_back({"block", "n", "p", "time s", "power W", "energy J", "energy 95% CI", "EDP", "ci"});
  if (r.settings.alpha != 0.05)
    table.front()[6] = "energy " + fmt::shortest(100.0 * (1.0 - r.settings.alpha)) + "% CI";
  std::size_t hidden = 0;
  for (const auto& row : r.rows) {
    const auto& e = row.estimate;
    if (e.n_k < min_samples) {
      ++hidden;
      continue;
    }
    table.push_back({row.label, std::to_string(e.n_k), fmt::fixed(e.p_hat, 4), fmt::fixed(e.t_hat, 6),
                     fmt::fixed(e.pow_hat, 3), fmt::fixed(e.e_hat, 6),
                     "[" + fmt::fixed(e.e_ci.lower, 6) + ", " + fmt::fixed(e.e_ci.upper, 6) + "]", sci(row.edp),
                     e.ci_valid ? "ok" : "low-n"});
  }
  std::vector<std::size_t> width(table.front().size(), 0);
  for (const auto& line : table)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  for (const auto& line : table) {
    std::string text;
    for (std::size_t c = 0; c < line.size(); ++c) {
      const auto pad = std::string(width[c] - line[c].size(), ' ');
      text += c == 0 ? line[c] + pad : pad + line[c];
      if (c + 1 < line.size()) text += "  ";
    }
    os << text << '\n';
  }
  if (hidden > 0) os << "(" << hidden << " rows with fewer than " << min_samples << " samples hidden)\n";
  os << "\ntotal           p " << fmt::fixed(r.total_p(), 4) << ", time " << fmt::fixed(r.total_t(), 6)
     << " s, energy " << fmt::fixed(r.total_e(), 6) << " J\n";
  for (const auto& d : r.domains)
    os << "domain " << d.domain << "  estimated " << fmt::fixed(d.estimated_j, 6) << " J, integrated "
       << fmt::fixed(d.integrated_j, 6) << " J, difference " << fmt::fixed(d.discrepancy_j(), 6) << " J\n";
  if (!r.unsampled.empty()) {
    os << "\nnever sampled:";
    for (const auto& u : r.unsampled) os << ' ' << u.label;
    os << '\n';
  }
  return os.str();
}

std::string render(const Report& report, ReportFormat format, std::uint64_t min_samples) {
  switch (format) {
    case ReportFormat::json: return render_json(report);
    case ReportFormat::csv: return render_csv(report);
    case ReportFormat::text: return render_text(report, min_samples);
  }
  return render_json(report);
}

}  // namespace alea
