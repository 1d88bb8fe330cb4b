#include "alea/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>

#include <json.hpp>

#include "alea/error.hpp"

namespace alea::sim {

namespace {

using json = nlohmann::json;

void check_spec(const SyntheticBlockSpec& b) {
  const auto& l = b.latency;
  if (b.iterations == 0) throw Error(ErrorKind::invalid_input, "block " + b.label + ": iterations must be >= 1");
  if (l.a < 1 || (l.kind != LatencyDist::Kind::constant && l.b < 1))
    throw Error(ErrorKind::invalid_input, "block " + b.label + ": latencies must be >= 1 tick");
  if (l.kind == LatencyDist::Kind::uniform && l.b < l.a)
    throw Error(ErrorKind::invalid_input, "block " + b.label + ": uniform latency needs min <= max");
  if (l.kind == LatencyDist::Kind::two_point && !(l.p_b >= 0.0 && l.p_b <= 1.0))
    throw Error(ErrorKind::invalid_input, "block " + b.label + ": two-point probability outside [0, 1]");
  if (!(b.power.mean >= 0.0) || !(b.power.sd >= 0.0) || !std::isfinite(b.power.mean))
    throw Error(ErrorKind::invalid_input, "block " + b.label + ": power must be non-negative");
}

std::uint64_t draw_latency(const LatencyDist& d, std::mt19937_64& rng) {
  switch (d.kind) {
    case LatencyDist::Kind::constant: return d.a;
    case LatencyDist::Kind::uniform: return std::uniform_int_distribution<std::uint64_t>(d.a, d.b)(rng);
    case LatencyDist::Kind::two_point: return std::bernoulli_distribution(d.p_b)(rng) ? d.b : d.a;
  }
  return d.a;
}

double draw_power(const PowerDist& d, std::mt19937_64& rng) {
  if (d.kind == PowerDist::Kind::constant || d.sd == 0.0) return d.mean;
  std::normal_distribution<double> normal(d.mean, d.sd);
  for (int i = 0; i < 64; ++i) {
    const double w = normal(rng);
    if (w >= 0.0) return w;
  }
  return 0.0;
}

// Cumulative energy (watt-ticks) at every segment start, for window averages.
struct EnergyIndex {
  const Timeline* timeline = nullptr;
  std::vector<std::uint64_t> starts;
  std::vector<double> before;

  explicit EnergyIndex(const Timeline& t) : timeline(&t) {
    double acc = 0.0;
    for (const auto& s : t.segments) {
      starts.push_back(s.start_tick);
      before.push_back(acc);
      acc += s.watts * static_cast<double>(s.ticks());
    }
  }

  std::size_t index(std::uint64_t tick) const {
    return static_cast<std::size_t>(std::upper_bound(starts.begin(), starts.end(), tick) - starts.begin()) - 1;
  }

  // Energy over [0, tick); ticks past the end add nothing.
  double upto(std::uint64_t tick) const {
    if (tick == 0 || starts.empty()) return 0.0;
    const auto total = timeline->total_ticks();
    if (tick >= total) {
      const auto& last = timeline->segments.back();
      return before.back() + last.watts * static_cast<double>(last.ticks());
    }
    const auto i = index(tick);
    const auto& s = timeline->segments[i];
    return before[i] + s.watts * static_cast<double>(tick - s.start_tick);
  }

  const Segment* at(std::uint64_t tick) const {
    if (tick >= timeline->total_ticks()) return nullptr;
    return &timeline->segments[index(tick)];
  }
};

std::uint64_t total_of(std::span<const Timeline> slots) {
  std::uint64_t total = 0;
  for (const auto& t : slots) total = std::max(total, t.total_ticks());
  return total;
}

double rel_error(double estimate, double truth) {
  if (truth == 0.0) return estimate == 0.0 ? 0.0 : 1.0;
  return std::abs(estimate - truth) / std::abs(truth);
}

LatencyDist parse_latency(const json& j) {
  if (j.is_number_unsigned()) return LatencyDist::constant(j.get<std::uint64_t>());
  const auto dist = j.value("dist", std::string("constant"));
  if (dist == "constant") return LatencyDist::constant(j.at("ticks").get<std::uint64_t>());
  if (dist == "uniform") return LatencyDist::uniform(j.at("min").get<std::uint64_t>(), j.at("max").get<std::uint64_t>());
  if (dist == "two_point")
    return LatencyDist::two_point(j.at("low").get<std::uint64_t>(), j.at("high").get<std::uint64_t>(),
                                  j.value("p_high", 0.5));
  throw Error(ErrorKind::invalid_input, "unknown latency distribution '" + dist + "'");
}

PowerDist parse_power(const json& j) {
  if (j.is_number()) return PowerDist::constant(j.get<double>());
  const auto dist = j.value("dist", std::string("constant"));
  if (dist == "constant") return PowerDist::constant(j.at("watts").get<double>());
  if (dist == "gaussian") return PowerDist::gaussian(j.at("mean").get<double>(), j.at("sd").get<double>());
  throw Error(ErrorKind::invalid_input, "unknown power distribution '" + dist + "'");
}

}  // namespace

double LatencyDist::mean() const {
  switch (kind) {
    case Kind::constant: return static_cast<double>(a);
    case Kind::uniform: return 0.5 * (static_cast<double>(a) + static_cast<double>(b));
    case Kind::two_point: return (1.0 - p_b) * static_cast<double>(a) + p_b * static_cast<double>(b);
  }
  return static_cast<double>(a);
}

const Segment& Timeline::at(std::uint64_t tick) const {
  if (tick >= total_ticks()) throw Error(ErrorKind::invalid_input, "tick past the end of the timeline");
  auto it = std::upper_bound(segments.begin(), segments.end(), tick,
                             [](std::uint64_t t, const Segment& s) { return t < s.start_tick; });
  return *(it - 1);
}

Timeline generate_timeline(std::span<const SyntheticBlockSpec> program, Schedule schedule, std::uint64_t seed,
                           double tick_hz) {
  if (program.empty()) throw Error(ErrorKind::invalid_input, "empty program");
  if (!(tick_hz > 0.0)) throw Error(ErrorKind::invalid_input, "tick_hz must be positive");
  for (const auto& b : program) check_spec(b);

  std::mt19937_64 rng(seed);
  Timeline out;
  out.tick_hz = tick_hz;
  std::uint64_t now = 0;
  auto visit = [&](const SyntheticBlockSpec& b) {
    const auto len = draw_latency(b.latency, rng);
    const double watts = draw_power(b.power, rng);
    out.segments.push_back({b.key, now, now + len, watts});
    now += len;
  };

  if (schedule == Schedule::sequential) {
    for (const auto& b : program)
      for (std::uint64_t j = 0; j < b.iterations; ++j) visit(b);
    return out;
  }

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> next;
  std::vector<std::uint64_t> done(program.size(), 0);
  for (std::size_t i = 0; i < program.size(); ++i) next.push({0.5 / static_cast<double>(program[i].iterations), i});
  while (!next.empty()) {
    const auto i = next.top().second;
    next.pop();
    visit(program[i]);
    if (++done[i] < program[i].iterations)
      next.push({(static_cast<double>(done[i]) + 0.5) / static_cast<double>(program[i].iterations), i});
  }
  return out;
}

void validate(const Timeline& timeline) {
  std::uint64_t expect = 0;
  for (const auto& s : timeline.segments) {
    if (s.start_tick != expect || s.end_tick <= s.start_tick)
      throw Error(ErrorKind::invalid_input, "timeline segments must be contiguous and non-empty");
    expect = s.end_tick;
  }
  if (!(timeline.tick_hz > 0.0)) throw Error(ErrorKind::invalid_input, "tick_hz must be positive");
}

GroundTruth true_totals(const Timeline& timeline) { return true_totals(std::span<const Timeline>(&timeline, 1)); }

GroundTruth true_totals(std::span<const Timeline> slots) {
  if (slots.empty()) throw Error(ErrorKind::invalid_input, "no timelines");
  for (const auto& t : slots) {
    validate(t);
    if (t.tick_hz != slots.front().tick_hz) throw Error(ErrorKind::invalid_input, "thread slots disagree on tick_hz");
  }
  const double hz = slots.front().tick_hz;
  GroundTruth truth;
  truth.total_ticks = total_of(slots);

  std::map<CombinationKey, double> energy;  // watt-ticks
  std::vector<std::size_t> pos(slots.size(), 0);
  std::uint64_t now = 0;
  while (now < truth.total_ticks) {
    CombinationKey key;
    double watts = 0.0;
    std::uint64_t next = truth.total_ticks;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const auto& segs = slots[s].segments;
      while (pos[s] < segs.size() && segs[pos[s]].end_tick <= now) ++pos[s];
      if (pos[s] == segs.size()) {
        key.blocks.push_back(BlockKey::absent());
        continue;
      }
      const auto& seg = segs[pos[s]];
      key.blocks.push_back(seg.key);
      watts += seg.watts;
      next = std::min(next, seg.end_tick);
    }
    const auto span = next - now;
    truth.keys[key].ticks += span;
    energy[key] += watts * static_cast<double>(span);
    now = next;
  }

  truth.t_exec_s = static_cast<double>(truth.total_ticks) / hz;
  for (auto& [key, e] : truth.keys) {
    e.p = static_cast<double>(e.ticks) / static_cast<double>(truth.total_ticks);
    e.t_s = static_cast<double>(e.ticks) / hz;
    e.e_j = energy[key] / hz;
    e.mean_watts = energy[key] / static_cast<double>(e.ticks);
    truth.e_total_j += e.e_j;
  }
  return truth;
}

std::vector<std::uint64_t> sample_ticks(std::uint64_t total_ticks, const SamplingPlan& plan) {
  if (plan.period_ticks < 1) throw Error(ErrorKind::invalid_input, "period must be at least one tick");
  if (!(plan.jitter >= 0.0 && plan.jitter < 0.5)) throw Error(ErrorKind::invalid_input, "jitter must lie in [0, 0.5)");
  if (plan.first_offset && *plan.first_offset >= plan.period_ticks)
    throw Error(ErrorKind::invalid_input, "first offset must lie in [0, period)");

  std::mt19937_64 rng(plan.seed);
  const auto period = static_cast<std::int64_t>(plan.period_ticks);
  const auto first = plan.first_offset ? static_cast<std::int64_t>(*plan.first_offset)
                                       : std::uniform_int_distribution<std::int64_t>(0, period - 1)(rng);
  const auto bound =
      plan.jitter_enabled ? static_cast<std::int64_t>(std::floor(plan.jitter * static_cast<double>(period))) : 0;
  std::uniform_int_distribution<std::int64_t> jitter(-bound, bound);

  std::vector<std::uint64_t> out;
  const auto total = static_cast<std::int64_t>(total_ticks);
  for (std::int64_t i = 0;; ++i) {
    const std::int64_t base = first + i * period;
    const std::int64_t tick = base + (bound > 0 ? jitter(rng) : 0);
    if (base - bound >= total) break;
    if (tick < 0 || tick >= total) continue;
    out.push_back(static_cast<std::uint64_t>(tick));
  }
  return out;
}

std::vector<SampleRecord> sample_timeline(const Timeline& timeline, const SamplingPlan& plan) {
  return sample_timeline(std::span<const Timeline>(&timeline, 1), plan);
}

std::vector<SampleRecord> sample_timeline(std::span<const Timeline> slots, const SamplingPlan& plan) {
  if (slots.empty()) throw Error(ErrorKind::invalid_input, "no timelines");
  std::vector<EnergyIndex> index;
  for (const auto& t : slots) {
    validate(t);
    index.emplace_back(t);
  }
  const double hz = slots.front().tick_hz;
  const auto ticks = sample_ticks(total_of(slots), plan);

  std::vector<SampleRecord> out;
  out.reserve(ticks.size());
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    const auto tick = ticks[i];
    SampleRecord r;
    r.seq = i;
    r.wall_time_ns = static_cast<std::int64_t>(std::llround(static_cast<double>(tick) * 1e9 / hz));
    double watts = 0.0;
    const std::uint64_t lo = tick + 1 >= plan.period_ticks ? tick + 1 - plan.period_ticks : 0;
    for (const auto& idx : index) {
      const auto* seg = idx.at(tick);
      r.key.blocks.push_back(seg ? seg->key : BlockKey::absent());
      if (plan.power_mode == PowerMode::instantaneous) {
        if (seg) watts += seg->watts;
      } else {
        watts += (idx.upto(tick + 1) - idx.upto(lo)) / static_cast<double>(tick + 1 - lo);
      }
    }
    r.power.timestamp_ns = r.wall_time_ns;
    r.power.readings.push_back({plan.domain, watts, ReadingStatus::ok});
    out.push_back(std::move(r));
  }
  return out;
}

ErrorReport evaluate(const Profile& profile, const GroundTruth& truth) {
  ErrorReport report;
  std::size_t matched = 0;
  for (const auto& [key, t] : truth.keys) {
    KeyError k;
    k.key = key;
    k.truth = t;
    if (const auto* e = profile.find(key)) {
      ++matched;
      k.n_k = e->n_k;
      k.rel_p = rel_error(e->p_hat, t.p);
      k.rel_t = rel_error(e->t_hat, t.t_s);
      k.rel_pow = rel_error(e->pow_hat, t.mean_watts);
      k.rel_e = rel_error(e->e_hat, t.e_j);
      k.ci_valid = e->ci_valid;
      k.p_covered = e->p_ci.contains(t.p);
      k.pow_ci_computable = e->pow_ci_computable;
      k.pow_covered = e->pow_ci.contains(t.mean_watts);
      k.e_covered = e->e_ci.contains(t.e_j);
    } else {
      k.rel_p = k.rel_t = k.rel_pow = k.rel_e = 1.0;
    }
    report.mare_p += k.rel_p;
    report.mare_t += k.rel_t;
    report.mare_pow += k.rel_pow;
    report.mare_e += k.rel_e;
    if (k.ci_valid) {
      ++report.valid;
      report.p_covered += k.p_covered;
      report.pow_covered += k.pow_covered;
      report.e_covered += k.e_covered;
    }
    report.keys.push_back(std::move(k));
  }
  if (matched == 0) throw Error(ErrorKind::invalid_input, "profile and ground truth share no key");
  const auto n = static_cast<double>(report.keys.size());
  report.mare_p /= n;
  report.mare_t /= n;
  report.mare_pow /= n;
  report.mare_e /= n;
  for (const auto& e : profile.estimates) {
    const bool unknown = std::any_of(e.key.blocks.begin(), e.key.blocks.end(), [](BlockKey b) { return b.is_unknown(); });
    if (!unknown && !truth.keys.contains(e.key)) ++report.unmatched;
  }
  return report;
}

Scenario parse_scenario(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("scenario: ") + e.what());
  }
  Scenario sc;
  try {
    sc.tick_hz = j.value("tick_hz", 1e6);
    sc.threads = j.value("threads", std::size_t{1});
    sc.seed = j.value("seed", std::uint64_t{1});
    sc.replications = j.value("replications", std::size_t{1});
    sc.alpha = j.value("alpha", 0.05);
    const auto schedule = j.value("schedule", std::string("round_robin"));
    if (schedule == "round_robin") sc.schedule = Schedule::round_robin;
    else if (schedule == "sequential") sc.schedule = Schedule::sequential;
    else throw Error(ErrorKind::invalid_input, "unknown schedule '" + schedule + "'");
    const auto gran = j.value("granularity", std::string("combination"));
    if (gran == "combination") sc.granularity = Granularity::combination;
    else if (gran == "block") sc.granularity = Granularity::block;
    else throw Error(ErrorKind::invalid_input, "unknown granularity '" + gran + "'");

    const auto& blocks = j.at("blocks");
    if (!blocks.is_array() || blocks.empty()) throw Error(ErrorKind::invalid_input, "scenario needs blocks");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& b = blocks[i];
      SyntheticBlockSpec spec;
      spec.key = {0, static_cast<std::uint32_t>(i)};
      spec.label = b.value("label", "block" + std::to_string(i));
      spec.latency = parse_latency(b.at("latency"));
      spec.power = parse_power(b.at("power"));
      spec.iterations = b.value("iterations", std::uint64_t{1});
      check_spec(spec);
      sc.program.push_back(std::move(spec));
    }

    if (j.contains("sampling")) {
      const auto& s = j.at("sampling");
      sc.sampling.period_ticks = s.value("period_ticks", sc.sampling.period_ticks);
      sc.sampling.jitter = s.value("jitter", sc.sampling.jitter);
      sc.sampling.jitter_enabled = s.value("jitter_enabled", true);
      if (s.contains("first_offset") && !s.at("first_offset").is_null())
        sc.sampling.first_offset = s.at("first_offset").get<std::uint64_t>();
      const auto mode = s.value("power_mode", std::string("instantaneous"));
      if (mode == "instantaneous") sc.sampling.power_mode = PowerMode::instantaneous;
      else if (mode == "trailing_window") sc.sampling.power_mode = PowerMode::trailing_window;
      else throw Error(ErrorKind::invalid_input, "unknown power mode '" + mode + "'");
      if (s.contains("domain")) sc.sampling.domain = PowerDomain::parse(s.at("domain").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("scenario: ") + e.what());
  }
  if (sc.threads < 1) throw Error(ErrorKind::invalid_input, "scenario needs at least one thread");
  if (!(sc.alpha > 0.0 && sc.alpha < 1.0)) throw Error(ErrorKind::invalid_input, "alpha must lie in (0, 1)");
  if (!(sc.tick_hz > 0.0)) throw Error(ErrorKind::invalid_input, "tick_hz must be positive");
  if (sc.sampling.period_ticks < 1) throw Error(ErrorKind::invalid_input, "period must be at least one tick");
  if (!(sc.sampling.jitter >= 0.0 && sc.sampling.jitter < 0.5))
    throw Error(ErrorKind::invalid_input, "jitter must lie in [0, 0.5)");
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse, "cannot open scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Replication run_replication(const Scenario& scenario, std::size_t r) {
  std::seed_seq seq{scenario.seed, static_cast<std::uint64_t>(r)};
  std::vector<std::uint64_t> seeds(scenario.threads + 1);
  seq.generate(seeds.begin(), seeds.end());

  Replication rep;
  for (std::size_t s = 0; s < scenario.threads; ++s)
    rep.slots.push_back(generate_timeline(scenario.program, scenario.schedule, seeds[s], scenario.tick_hz));
  rep.truth = true_totals(rep.slots);
  SamplingPlan plan = scenario.sampling;
  plan.seed = seeds.back();
  rep.samples = sample_timeline(rep.slots, plan);
  ProfileOptions options;
  options.confidence = ConfidenceSpec(scenario.alpha);
  options.granularity = scenario.granularity;
  rep.profile = build_profile(rep.samples, rep.truth.t_exec_s, options);
  if (scenario.threads == 1 || scenario.granularity == Granularity::combination)
    rep.errors = evaluate(rep.profile, rep.truth);
  return rep;
}

SimulationSummary simulate(const Scenario& scenario, std::size_t replications) {
  if (replications == 0) throw Error(ErrorKind::invalid_input, "at least one replication");
  if (scenario.threads > 1 && scenario.granularity == Granularity::block)
    throw Error(ErrorKind::invalid_input, "block granularity has no ground truth with several threads");
  SimulationSummary out;
  out.replications = replications;
  std::size_t p_cov = 0, pow_cov = 0, e_cov = 0;
  std::map<BlockKey, BlockSummary> blocks;
  for (const auto& b : scenario.program) blocks[b.key] = {b.key, b.label, b.latency.mean(), 0.0, 0.0};

  for (std::size_t r = 0; r < replications; ++r) {
    const auto rep = run_replication(scenario, r);
    out.mare_t += rep.errors.mare_t;
    out.mare_pow += rep.errors.mare_pow;
    out.mare_e += rep.errors.mare_e;
    out.valid_pairs += rep.errors.valid;
    p_cov += rep.errors.p_covered;
    pow_cov += rep.errors.pow_covered;
    e_cov += rep.errors.e_covered;
    if (scenario.threads == 1)
      for (const auto& k : rep.errors.keys) {
        auto& b = blocks[k.key.blocks.front()];
        b.mare_t += k.rel_t;
        b.mare_e += k.rel_e;
      }
  }
  const auto reps = static_cast<double>(replications);
  out.mare_t /= reps;
  out.mare_pow /= reps;
  out.mare_e /= reps;
  if (out.valid_pairs > 0) {
    const auto v = static_cast<double>(out.valid_pairs);
    out.p_coverage = static_cast<double>(p_cov) / v;
    out.pow_coverage = static_cast<double>(pow_cov) / v;
    out.e_coverage = static_cast<double>(e_cov) / v;
  }
  if (scenario.threads == 1)
    for (auto& [key, b] : blocks) {
      b.mare_t /= reps;
      b.mare_e /= reps;
      out.blocks.push_back(b);
    }
  return out;
}

std::string summary_to_json(const SimulationSummary& s) {
  json j;
  j["replications"] = s.replications;
  j["mare"] = {{"time", s.mare_t}, {"power", s.mare_pow}, {"energy", s.mare_e}};
  j["coverage"] = {{"valid_pairs", s.valid_pairs},
                   {"proportion", s.p_coverage},
                   {"power", s.pow_coverage},
                   {"energy", s.e_coverage}};
  j["blocks"] = json::array();
  for (const auto& b : s.blocks)
    j["blocks"].push_back({{"block", b.key.block},
                           {"label", b.label},
                           {"mean_latency_ticks", b.mean_latency_ticks},
                           {"mare_time", b.mare_t},
                           {"mare_energy", b.mare_e}});
  return j.dump(2) + "\n";
}

BlockMap synthetic_blockmap(std::span<const SyntheticBlockSpec> program) {
  std::vector<BlockEntry> entries;
  for (const auto& b : program) {
    const auto start = synthetic_address({0, b.key.block});
    entries.push_back({"sim", {start, start + 0x1000}, b.label, MapGranularity::block});
  }
  return BlockMap("sim", std::move(entries));
}

std::uint64_t synthetic_address(BlockKey key) { return 0x10000 + std::uint64_t{key.block} * 0x1000; }

Trace to_trace(std::span<const SampleRecord> samples, double t_exec_s, const SamplingPlan& plan, double tick_hz) {
  Trace trace;
  trace.meta.t_exec_ns = static_cast<std::int64_t>(std::llround(t_exec_s * 1e9));
  trace.meta.period_ns = static_cast<std::int64_t>(std::llround(static_cast<double>(plan.period_ticks) * 1e9 / tick_hz));
  trace.meta.jitter = plan.jitter_enabled ? plan.jitter : 0.0;
  trace.meta.power_source = "sim";
  trace.meta.outcome = TargetOutcome::exited;
  for (const auto& r : samples) {
    RawSample s;
    s.seq = r.seq;
    s.wall_time_ns = r.wall_time_ns;
    s.power = r.power;
    for (std::size_t slot = 0; slot < r.key.size(); ++slot) {
      const auto k = r.key.blocks[slot];
      if (k.is_absent()) continue;
      const auto ip = k.is_unknown() ? std::uint64_t{0x8} : synthetic_address(k) + 0x10;
      s.threads.push_back({static_cast<int>(1 + slot), ip});
    }
    trace.samples.push_back(std::move(s));
  }
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    const auto gap = trace.samples[i].wall_time_ns - trace.samples[i - 1].wall_time_ns;
    trace.meta.spacing_min_ns = i == 1 ? gap : std::min(trace.meta.spacing_min_ns, gap);
    trace.meta.spacing_max_ns = std::max(trace.meta.spacing_max_ns, gap);
    sum += static_cast<double>(gap);
    sq += static_cast<double>(gap) * static_cast<double>(gap);
  }
  if (trace.samples.size() > 1) {
    const double m = static_cast<double>(trace.samples.size() - 1);
    trace.meta.spacing_mean_ns = sum / m;
    trace.meta.spacing_sd_ns = std::sqrt(std::max(0.0, sq / m - (sum / m) * (sum / m)));
  }
  return trace;
}

}  // namespace alea::sim
