#include "alea/trace.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "alea/error.hpp"
#include "alea/format.hpp"

namespace alea {

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  if (text.empty()) return out;
  std::size_t pos = 0;
  while (true) {
    auto next = text.find(sep, pos);
    out.push_back(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

[[noreturn]] void bad(std::string_view what) { throw Error(ErrorKind::parse, std::string(what)); }

std::int64_t to_int(std::string_view v, std::string_view what) {
  std::int64_t out = 0;
  if (!fmt::parse_int(v, out)) bad("invalid " + std::string(what) + " '" + std::string(v) + "'");
  return out;
}

double to_double(std::string_view v, std::string_view what) {
  double out = 0;
  if (!fmt::parse_double(v, out)) bad("invalid " + std::string(what) + " '" + std::string(v) + "'");
  return out;
}

TargetOutcome parse_outcome(std::string_view v) {
  for (auto o : {TargetOutcome::exited, TargetOutcome::crashed, TargetOutcome::running, TargetOutcome::unknown})
    if (v == to_string(o)) return o;
  bad("invalid outcome '" + std::string(v) + "'");
}

void apply_meta(TraceMeta& meta, std::string_view body) {
  if (body == "alea-trace 1") return;
  if (body == "partial") {
    meta.partial = true;
    return;
  }
  if (body.starts_with("mapping ")) {
    auto parts = split(body.substr(8), ' ');
    if (parts.size() < 3) bad("mapping needs START-END BIAS PATH");
    ModuleMapping m;
    auto dash = parts[0].find('-');
    if (dash == std::string_view::npos || !fmt::parse_hex(parts[0].substr(0, dash), m.range.start) ||
        !fmt::parse_hex(parts[0].substr(dash + 1), m.range.end) || !fmt::parse_hex(parts[1], m.bias))
      bad("malformed mapping");
    const auto path_pos = body.find(' ', 8 + parts[0].size() + 1 + parts[1].size());
    m.path = std::string(body.substr(path_pos + 1));
    meta.mappings.push_back(std::move(m));
    return;
  }
  auto eq = body.find('=');
  if (eq == std::string_view::npos) bad("metadata must be key=value");
  const auto key = body.substr(0, eq);
  const auto value = body.substr(eq + 1);
  if (key == "t_exec_ns") meta.t_exec_ns = to_int(value, key);
  else if (key == "period_ns") meta.period_ns = to_int(value, key);
  else if (key == "jitter") meta.jitter = to_double(value, key);
  else if (key == "power_source") meta.power_source = std::string(value);
  else if (key == "executable") meta.executable = std::string(value);
  else if (key == "stop_ns") meta.stop_ns = to_int(value, key);
  else if (key == "lateness_max_ns") meta.lateness_max_ns = to_int(value, key);
  else if (key == "outcome") meta.outcome = parse_outcome(value);
  else if (key == "exit_code") meta.exit_code = static_cast<int>(to_int(value, key));
  else if (key == "spacing") {
    auto parts = split(value, ',');
    if (parts.size() != 4) bad("spacing needs min,max,mean,sd");
    meta.spacing_min_ns = to_int(parts[0], "spacing");
    meta.spacing_max_ns = to_int(parts[1], "spacing");
    meta.spacing_mean_ns = to_double(parts[2], "spacing");
    meta.spacing_sd_ns = to_double(parts[3], "spacing");
  }
  // Unknown keys are ignored so newer writers stay readable.
}

}  // namespace

const char* to_string(TargetOutcome outcome) {
  switch (outcome) {
    case TargetOutcome::exited: return "exited";
    case TargetOutcome::crashed: return "crashed";
    case TargetOutcome::running: return "running";
    case TargetOutcome::unknown: return "unknown";
  }
  return "unknown";
}

std::string format_sample_line(const RawSample& sample) {
  std::string out = std::to_string(sample.seq);
  out += ',';
  out += std::to_string(sample.wall_time_ns);
  out += ',';
  for (std::size_t i = 0; i < sample.threads.size(); ++i) {
    if (i > 0) out += ';';
    out += std::to_string(sample.threads[i].tid);
    out += ':';
    out += fmt::hex(sample.threads[i].ip);
  }
  out += ',';
  for (std::size_t i = 0; i < sample.power.readings.size(); ++i) {
    if (i > 0) out += ';';
    out += sample.power.readings[i].domain.name();
    out += '=';
    out += format_watts(sample.power.readings[i]);
  }
  return out;
}

RawSample parse_sample_line(std::string_view line) {
  auto fields = split(line, ',');
  if (fields.size() != 4) bad("expected seq,wall_time_ns,threads,power");
  RawSample s;
  std::uint64_t seq = 0;
  if (!fmt::parse_uint(fields[0], seq)) bad("invalid seq '" + std::string(fields[0]) + "'");
  s.seq = seq;
  s.wall_time_ns = to_int(fields[1], "wall_time_ns");
  if (s.wall_time_ns < 0) bad("negative wall time");
  for (auto item : split(fields[2], ';')) {
    auto colon = item.find(':');
    ThreadIp t;
    std::int64_t tid = 0;
    if (colon == std::string_view::npos || !fmt::parse_int(item.substr(0, colon), tid) ||
        !fmt::parse_hex(item.substr(colon + 1), t.ip))
      bad("invalid thread entry '" + std::string(item) + "'");
    t.tid = static_cast<int>(tid);
    s.threads.push_back(t);
  }
  s.power.timestamp_ns = s.wall_time_ns;
  for (auto item : split(fields[3], ';')) {
    auto eq = item.find('=');
    if (eq == std::string_view::npos) bad("invalid power entry '" + std::string(item) + "'");
    s.power.readings.push_back(parse_reading(item.substr(0, eq), item.substr(eq + 1)));
  }
  return s;
}

void write_trace_header(std::ostream& out, const TraceMeta& meta) {
  out << "#! alea-trace 1\n";
  out << "# seq,wall_time_ns,tid:ip_hex[;...],domain=watts[;...]\n";
  if (meta.period_ns > 0) out << "#! period_ns=" << meta.period_ns << '\n';
  out << "#! jitter=" << fmt::shortest(meta.jitter) << '\n';
  if (!meta.power_source.empty()) out << "#! power_source=" << meta.power_source << '\n';
  if (!meta.executable.empty()) out << "#! executable=" << meta.executable << '\n';
}

void write_trace_footer(std::ostream& out, const TraceMeta& meta) {
  for (const auto& m : meta.mappings)
    out << "#! mapping " << fmt::hex(m.range.start) << '-' << fmt::hex(m.range.end) << ' ' << fmt::hex(m.bias)
        << ' ' << m.path << '\n';
  if (meta.t_exec_ns) out << "#! t_exec_ns=" << *meta.t_exec_ns << '\n';
  out << "#! stop_ns=" << meta.stop_ns << '\n';
  out << "#! spacing=" << meta.spacing_min_ns << ',' << meta.spacing_max_ns << ','
      << fmt::shortest(meta.spacing_mean_ns) << ',' << fmt::shortest(meta.spacing_sd_ns) << '\n';
  out << "#! lateness_max_ns=" << meta.lateness_max_ns << '\n';
  out << "#! outcome=" << to_string(meta.outcome) << '\n';
  out << "#! exit_code=" << meta.exit_code << '\n';
  if (meta.partial) out << "#! partial\n";
}

void write_trace(std::ostream& out, const Trace& trace) {
  write_trace_header(out, trace.meta);
  for (const auto& s : trace.samples) out << format_sample_line(s) << '\n';
  write_trace_footer(out, trace.meta);
}

Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = line;
    if (!v.empty() && v.back() == '\r') v.remove_suffix(1);
    try {
      if (v.starts_with("#! ")) {
        apply_meta(trace.meta, v.substr(3));
        continue;
      }
      if (fmt::trim(v).empty() || v.front() == '#') continue;
      auto s = parse_sample_line(v);
      if (!trace.samples.empty()) {
        const auto& prev = trace.samples.back();
        if (s.seq <= prev.seq) bad("seq must be strictly increasing");
        if (s.wall_time_ns < prev.wall_time_ns) bad("wall time goes backwards");
      }
      trace.samples.push_back(std::move(s));
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, "trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (trace.samples.empty()) throw Error(ErrorKind::parse, "trace contains no samples");
  return trace;
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse, "cannot open trace " + path.string());
  return read_trace(in);
}

std::vector<SampleRecord> to_records(const std::vector<RawSample>& samples, const Symbolizer& symbols) {
  std::vector<int> slots;
  for (const auto& s : samples)
    for (const auto& t : s.threads)
      if (std::find(slots.begin(), slots.end(), t.tid) == slots.end()) slots.push_back(t.tid);
  if (slots.empty()) slots.push_back(0);  // keep l >= 1 for samples with no readable thread

  std::vector<SampleRecord> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    SampleRecord r;
    r.seq = s.seq;
    r.wall_time_ns = s.wall_time_ns;
    r.power = s.power;
    r.key.blocks.assign(slots.size(), BlockKey::absent());
    for (const auto& t : s.threads) {
      const auto slot = std::find(slots.begin(), slots.end(), t.tid) - slots.begin();
      r.key.blocks[slot] = symbols.resolve(t.ip);
    }
    out.push_back(std::move(r));
  }
  return out;
}

ExecTime exec_time(const Trace& trace) {
  if (trace.meta.t_exec_ns) return {static_cast<double>(*trace.meta.t_exec_ns) * 1e-9, true};
  if (trace.samples.empty()) return {0.0, false};
  const auto& first = trace.samples.front();
  const auto& last = trace.samples.back();
  const double spacing = trace.samples.size() > 1
                             ? static_cast<double>(last.wall_time_ns - first.wall_time_ns) /
                                   static_cast<double>(trace.samples.size() - 1)
                             : static_cast<double>(trace.meta.period_ns);
  return {(static_cast<double>(last.wall_time_ns) + spacing) * 1e-9, false};
}

}  // namespace alea
