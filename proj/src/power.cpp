#include "alea/power.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "alea/error.hpp"
#include "alea/format.hpp"

namespace alea {

namespace {

struct NamedKind {
  const char* name;
  PowerDomain::Kind kind;
};

constexpr NamedKind kKnownDomains[] = {
    {"PKG", PowerDomain::Kind::pkg},
    {"PP0", PowerDomain::Kind::pp0},
    {"PP1", PowerDomain::Kind::pp1},
    {"DRAM", PowerDomain::Kind::dram},
    {"BIG_CLUSTER", PowerDomain::Kind::big_cluster},
    {"LITTLE_CLUSTER", PowerDomain::Kind::little_cluster},
    {"GPU", PowerDomain::Kind::gpu},
};

bool valid_domain_name(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name)
    if (c == ',' || c == ';' || c == '=' || c == ':' || c == '\n' || c == '\r' || c == ' ' || c == '\t')
      return false;
  return true;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = text.find(sep, pos);
    out.push_back(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) {
    std::error_code ec;
    const bool exists = std::filesystem::exists(path, ec);
    throw Error(ErrorKind::source, what + ": cannot open " + path.string() +
                                       (exists ? " (permission denied?)" : " (no such file)"));
  }
  std::string text;
  std::getline(in, text);
  if (in.bad()) throw Error(ErrorKind::source, what + ": read failed on " + path.string());
  return text;
}

std::uint64_t read_uint_file(const std::filesystem::path& path, const std::string& what) {
  const auto text = read_text_file(path, what);
  std::uint64_t v = 0;
  if (!fmt::parse_uint(fmt::trim(text), v))
    throw Error(ErrorKind::source, what + ": unexpected content in " + path.string());
  return v;
}

}  // namespace

PowerDomain::PowerDomain(Kind kind) : kind_(kind) {
  for (const auto& k : kKnownDomains)
    if (k.kind == kind) name_ = k.name;
  if (kind == Kind::custom) throw Error(ErrorKind::invalid_input, "custom power domains need a name");
}

PowerDomain PowerDomain::parse(std::string_view name) {
  if (!valid_domain_name(name))
    throw Error(ErrorKind::invalid_input, "invalid power domain name '" + std::string(name) + "'");
  PowerDomain d;
  d.name_ = std::string(name);
  d.kind_ = Kind::custom;
  for (const auto& k : kKnownDomains)
    if (name == k.name) d.kind_ = k.kind;
  return d;
}

const PowerReading* PowerSample::find(const PowerDomain& domain) const {
  for (const auto& r : readings)
    if (r.domain == domain) return &r;
  return nullptr;
}

CounterPower power_from_energy_delta(const EnergyCounterState& prev, std::uint64_t raw_now_uj,
                                     std::int64_t t_now_ns, double cap_watts) {
  if (t_now_ns <= prev.last_time_ns)
    throw Error(ErrorKind::invalid_input, "energy counter read without elapsed time");
  if (prev.wrap_range_uj == 0 || raw_now_uj >= prev.wrap_range_uj || prev.last_raw_uj >= prev.wrap_range_uj)
    throw Error(ErrorKind::invalid_input, "energy counter value outside its wrap range");

  CounterPower out;
  out.delta_uj = raw_now_uj >= prev.last_raw_uj ? raw_now_uj - prev.last_raw_uj
                                                : prev.wrap_range_uj - prev.last_raw_uj + raw_now_uj;
  const double dt_s = static_cast<double>(t_now_ns - prev.last_time_ns) * 1e-9;
  out.watts = static_cast<double>(out.delta_uj) * 1e-6 / dt_s;
  out.suspect = out.watts > cap_watts;
  out.state = {raw_now_uj, prev.wrap_range_uj, t_now_ns};
  return out;
}

void PowerSource::note_flags(const PowerSample& sample) {
  for (const auto& r : sample.readings)
    if (!r.usable()) ++flagged_;
}

MockPowerSource::MockPowerSource(std::vector<PowerReading> readings) : readings_(std::move(readings)) {
  for (const auto& r : readings_) {
    if (!(r.watts >= 0.0)) throw Error(ErrorKind::invalid_input, "mock power must be non-negative");
    for (const auto& d : domains_)
      if (d == r.domain) throw Error(ErrorKind::invalid_input, "duplicate domain " + d.name());
    domains_.push_back(r.domain);
  }
}

std::optional<PowerSample> MockPowerSource::read(std::int64_t now_ns) {
  return PowerSample{now_ns, readings_};
}

std::optional<PowerSample> NullPowerSource::read(std::int64_t now_ns) { return PowerSample{now_ns, {}}; }

EnergyCounterSource::EnergyCounterSource(std::vector<CounterChannel> channels, double cap_watts)
    : channels_(std::move(channels)), cap_watts_(cap_watts) {
  if (channels_.empty()) throw Error(ErrorKind::source, "energy counter source without channels");
  for (const auto& c : channels_) {
    if (c.wrap_range_uj == 0)
      throw Error(ErrorKind::source, c.domain.name() + ": counter wrap range must be configured");
    for (const auto& d : domains_)
      if (d == c.domain) throw Error(ErrorKind::source, "duplicate domain " + d.name());
    domains_.push_back(c.domain);
  }
}

std::uint64_t EnergyCounterSource::read_channel(const CounterChannel& channel) const {
  const auto raw = channel.read_raw_uj();
  if (raw >= channel.wrap_range_uj)
    throw Error(ErrorKind::source, channel.domain.name() + ": counter value " + std::to_string(raw) +
                                       " exceeds wrap range (" + channel.origin + ")");
  return raw;
}

void EnergyCounterSource::start(std::int64_t now_ns) {
  states_.clear();
  for (const auto& c : channels_) states_.push_back({read_channel(c), c.wrap_range_uj, now_ns});
  seeded_ = true;
}

std::optional<PowerSample> EnergyCounterSource::read(std::int64_t now_ns) {
  if (!seeded_) {
    start(now_ns);
    return PowerSample{now_ns, {}};
  }
  PowerSample sample{now_ns, {}};
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    auto& state = states_[i];
    auto raw = read_channel(channels_[i]);
    bool stale = false;
    if (raw == state.last_raw_uj) {
      raw = read_channel(channels_[i]);
      stale = raw == state.last_raw_uj;
    }
    if (now_ns <= state.last_time_ns) {
      sample.readings.push_back({channels_[i].domain, 0.0, ReadingStatus::stale});
      continue;
    }
    const auto p = power_from_energy_delta(state, raw, now_ns, cap_watts_);
    state = p.state;
    const auto status = p.suspect ? ReadingStatus::suspect : stale ? ReadingStatus::stale : ReadingStatus::ok;
    sample.readings.push_back({channels_[i].domain, p.watts, status});
  }
  note_flags(sample);
  return sample;
}

MeterSource::MeterSource(std::vector<MeterChannel> channels, double cap_watts)
    : channels_(std::move(channels)), cap_watts_(cap_watts) {
  if (channels_.empty()) throw Error(ErrorKind::source, "meter source without channels");
  for (const auto& c : channels_) {
    for (const auto& d : domains_)
      if (d == c.domain) throw Error(ErrorKind::source, "duplicate domain " + d.name());
    domains_.push_back(c.domain);
  }
}

std::optional<PowerSample> MeterSource::read(std::int64_t now_ns) {
  PowerSample sample{now_ns, {}};
  for (const auto& c : channels_) {
    const auto text = read_text_file(c.path, c.domain.name());
    double v = 0.0;
    if (!fmt::parse_double(fmt::trim(text), v))
      throw Error(ErrorKind::source, c.domain.name() + ": unexpected content in " + c.path.string());
    const double watts = v * c.scale;
    const bool suspect = watts < 0.0 || watts > cap_watts_;
    sample.readings.push_back({c.domain, watts < 0.0 ? 0.0 : watts,
                               suspect ? ReadingStatus::suspect : ReadingStatus::ok});
  }
  note_flags(sample);
  return sample;
}

ReplayPowerSource::ReplayPowerSource(std::vector<PowerSample> samples) : samples_(std::move(samples)) {
  for (const auto& s : samples_)
    for (const auto& r : s.readings) {
      bool seen = false;
      for (const auto& d : domains_) seen = seen || d == r.domain;
      if (!seen) domains_.push_back(r.domain);
    }
}

std::optional<PowerSample> ReplayPowerSource::read(std::int64_t) {
  if (next_ >= samples_.size()) return std::nullopt;
  const auto& s = samples_[next_++];
  note_flags(s);
  return s;
}

namespace {

double parse_cap(std::string_view value) {
  double cap = 0.0;
  if (!fmt::parse_double(value, cap) || cap <= 0.0)
    throw Error(ErrorKind::invalid_input, "invalid cap '" + std::string(value) + "'");
  return cap;
}

std::unique_ptr<PowerSource> open_powercap(std::string_view body) {
  auto parts = split(body, ';');
  double cap = std::numeric_limits<double>::infinity();
  std::optional<std::uint64_t> wrap;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    auto opt = parts[i];
    if (opt.starts_with("cap=")) {
      cap = parse_cap(opt.substr(4));
    } else if (opt.starts_with("wrap=")) {
      std::uint64_t w = 0;
      if (!fmt::parse_uint(opt.substr(5), w) || w == 0)
        throw Error(ErrorKind::invalid_input, "invalid wrap '" + std::string(opt) + "'");
      wrap = w;
    } else {
      throw Error(ErrorKind::invalid_input, "unknown powercap option '" + std::string(opt) + "'");
    }
  }

  std::vector<CounterChannel> channels;
  std::optional<double> tdp_watts;
  for (auto item : split(parts[0], ',')) {
    auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::invalid_input, "powercap channel must be DOMAIN=DIR, got '" + std::string(item) + "'");
    const auto domain = PowerDomain::parse(item.substr(0, eq));
    const std::filesystem::path dir(std::string(item.substr(eq + 1)));
    const auto energy = dir / "energy_uj";
    read_uint_file(energy, domain.name());  // fail early on missing or unreadable counters

    std::uint64_t range = 0;
    if (wrap) {
      range = *wrap;
    } else if (std::filesystem::exists(dir / "max_energy_range_uj")) {
      // The counter takes values 0..max_energy_range_uj inclusive.
      range = read_uint_file(dir / "max_energy_range_uj", domain.name()) + 1;
    } else {
      throw Error(ErrorKind::source, domain.name() + ": no max_energy_range_uj in " + dir.string() +
                                         "; pass ;wrap=UJ for this platform");
    }
    const auto tdp_file = dir / "constraint_0_max_power_uw";
    if (std::filesystem::exists(tdp_file)) {
      const double w = static_cast<double>(read_uint_file(tdp_file, domain.name())) * 1e-6;
      if (w > 0.0) tdp_watts = std::max(tdp_watts.value_or(0.0), w);
    }
    channels.push_back({domain, energy.string(),
                        [energy, name = domain.name()] { return read_uint_file(energy, name); }, range});
  }
  if (std::isinf(cap) && tdp_watts) cap = 10.0 * *tdp_watts;
  return std::make_unique<EnergyCounterSource>(std::move(channels), cap);
}

std::unique_ptr<PowerSource> open_meter(std::string_view body) {
  auto parts = split(body, ';');
  double cap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (!parts[i].starts_with("cap="))
      throw Error(ErrorKind::invalid_input, "unknown meter option '" + std::string(parts[i]) + "'");
    cap = parse_cap(parts[i].substr(4));
  }
  std::vector<MeterChannel> channels;
  for (auto item : split(parts[0], ',')) {
    auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::invalid_input, "meter channel must be DOMAIN=PATH, got '" + std::string(item) + "'");
    MeterChannel ch;
    ch.domain = PowerDomain::parse(item.substr(0, eq));
    auto target = item.substr(eq + 1);
    if (auto star = target.rfind('*'); star != std::string_view::npos) {
      if (!fmt::parse_double(target.substr(star + 1), ch.scale))
        throw Error(ErrorKind::invalid_input, "invalid meter scale in '" + std::string(item) + "'");
      target = target.substr(0, star);
    }
    ch.path = std::string(target);
    read_text_file(ch.path, ch.domain.name());
    channels.push_back(std::move(ch));
  }
  return std::make_unique<MeterSource>(std::move(channels), cap);
}

}  // namespace

std::unique_ptr<PowerSource> open_source(std::string_view descriptor) {
  if (descriptor == "none") return std::make_unique<NullPowerSource>();
  auto colon = descriptor.find(':');
  if (colon == std::string_view::npos)
    throw Error(ErrorKind::invalid_input, "power source must be BACKEND:ARGS, got '" + std::string(descriptor) + "'");
  const auto backend = descriptor.substr(0, colon);
  const auto body = descriptor.substr(colon + 1);
  if (body.empty()) throw Error(ErrorKind::invalid_input, "power source '" + std::string(backend) + "' needs arguments");

  if (backend == "mock") {
    std::vector<PowerReading> readings;
    for (auto item : split(body, ',')) {
      auto eq = item.find('=');
      double w = 0.0;
      if (eq == std::string_view::npos || !fmt::parse_double(item.substr(eq + 1), w))
        throw Error(ErrorKind::invalid_input, "mock channel must be DOMAIN=WATTS, got '" + std::string(item) + "'");
      readings.push_back({PowerDomain::parse(item.substr(0, eq)), w, ReadingStatus::ok});
    }
    return std::make_unique<MockPowerSource>(std::move(readings));
  }
  if (backend == "replay") {
    const std::filesystem::path path{std::string(body)};
    try {
      return std::make_unique<ReplayPowerSource>(read_power_trace(path));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::io) throw Error(ErrorKind::source, e.what());
      throw;
    }
  }
  if (backend == "powercap") return open_powercap(body);
  if (backend == "meter") return open_meter(body);
  throw Error(ErrorKind::invalid_input, "unknown power source backend '" + std::string(backend) + "'");
}

std::string format_watts(const PowerReading& reading) {
  auto s = fmt::shortest(reading.watts);
  if (reading.status == ReadingStatus::suspect) s += '!';
  if (reading.status == ReadingStatus::stale) s += '?';
  return s;
}

PowerReading parse_reading(std::string_view domain, std::string_view watts_field) {
  PowerReading r;
  r.domain = PowerDomain::parse(domain);
  if (!watts_field.empty() && watts_field.back() == '!') {
    r.status = ReadingStatus::suspect;
    watts_field.remove_suffix(1);
  } else if (!watts_field.empty() && watts_field.back() == '?') {
    r.status = ReadingStatus::stale;
    watts_field.remove_suffix(1);
  }
  if (!fmt::parse_double(watts_field, r.watts) || r.watts < 0.0)
    throw Error(ErrorKind::parse, "invalid watts '" + std::string(watts_field) + "'");
  return r;
}

void write_power_trace(std::ostream& out, const std::vector<PowerSample>& samples) {
  out << "timestamp_ns,domain,watts\n";
  for (const auto& s : samples)
    for (const auto& r : s.readings) out << s.timestamp_ns << ',' << r.domain.name() << ',' << format_watts(r) << '\n';
}

std::vector<PowerSample> read_power_trace(std::istream& in) {
  std::vector<PowerSample> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = line;
    if (!v.empty() && v.back() == '\r') v.remove_suffix(1);
    if (v.empty()) continue;
    if (!header) {
      if (v != "timestamp_ns,domain,watts")
        throw Error(ErrorKind::parse, "power trace line 1: expected header timestamp_ns,domain,watts");
      header = true;
      continue;
    }
    auto fields = split(v, ',');
    std::int64_t ts = 0;
    if (fields.size() != 3 || !fmt::parse_int(fields[0], ts))
      throw Error(ErrorKind::parse, "power trace line " + std::to_string(line_no) + ": malformed record");
    PowerReading r;
    try {
      r = parse_reading(fields[1], fields[2]);
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, "power trace line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!out.empty() && ts < out.back().timestamp_ns)
      throw Error(ErrorKind::parse, "power trace line " + std::to_string(line_no) + ": timestamp goes backwards");
    if (out.empty() || ts != out.back().timestamp_ns || out.back().find(r.domain) != nullptr)
      out.push_back(PowerSample{ts, {}});
    out.back().readings.push_back(std::move(r));
  }
  if (!header) throw Error(ErrorKind::parse, "power trace is empty");
  return out;
}

std::vector<PowerSample> read_power_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open power trace " + path.string());
  return read_power_trace(in);
}

}  // namespace alea
