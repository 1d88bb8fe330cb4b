#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "alea/error.hpp"
#include "alea/model.hpp"
#include "alea/sim.hpp"
#include "prop.hpp"

using namespace alea;
using namespace alea::sim;

namespace {

SyntheticBlockSpec block(std::uint32_t id, LatencyDist lat, PowerDist pow, std::uint64_t k) {
  return {{0, id}, "b" + std::to_string(id), lat, pow, k};
}

CombinationKey key(std::uint32_t id) { return CombinationKey::single({0, id}); }

SamplingPlan census() {
  SamplingPlan p;
  p.period_ticks = 1;
  p.jitter_enabled = false;
  p.first_offset = 0;
  return p;
}

// Per-tick walk over every slot, independent of the segment sums.
struct TickOracle {
  std::map<CombinationKey, std::uint64_t> ticks;
  std::map<CombinationKey, double> energy;  // watt-ticks
  std::uint64_t total = 0;
};

TickOracle brute_force(const std::vector<Timeline>& slots) {
  TickOracle o;
  for (const auto& t : slots) o.total = std::max(o.total, t.total_ticks());
  std::vector<std::size_t> seg(slots.size(), 0);
  for (std::uint64_t tick = 0; tick < o.total; ++tick) {
    CombinationKey k;
    double w = 0.0;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const auto& segs = slots[s].segments;
      while (seg[s] < segs.size() && segs[seg[s]].end_tick <= tick) ++seg[s];
      if (seg[s] < segs.size()) {
        k.blocks.push_back(segs[seg[s]].key);
        w += segs[seg[s]].watts;
      } else {
        k.blocks.push_back(BlockKey::absent());
      }
    }
    ++o.ticks[k];
    o.energy[k] += w;
  }
  return o;
}

Profile profile_of(const std::vector<SampleRecord>& samples, double t_exec) {
  return build_profile(samples, t_exec);
}

}  // namespace

TEST_CASE("timeline generation") {
  SUBCASE("one block") {
    std::vector<SyntheticBlockSpec> prog = {block(0, LatencyDist::constant(100), PowerDist::constant(5), 3)};
    auto t = generate_timeline(prog, Schedule::sequential, 1);
    REQUIRE(t.segments.size() == 3);
    CHECK(t.segments[0].start_tick == 0);
    CHECK(t.segments[2].end_tick == 300);
    CHECK(t.total_ticks() == 300);
    CHECK(t.tick_hz == 1e6);
    CHECK_NOTHROW(validate(t));
  }
  SUBCASE("two sequential blocks with equal totals split the run") {
    std::vector<SyntheticBlockSpec> prog = {block(0, LatencyDist::constant(100), PowerDist::constant(5), 10),
                                            block(1, LatencyDist::constant(250), PowerDist::constant(5), 4)};
    auto t = generate_timeline(prog, Schedule::sequential, 1);
    auto truth = true_totals(t);
    CHECK(truth.keys.at(key(0)).ticks == 1000);
    CHECK(truth.keys.at(key(1)).ticks == 1000);
    CHECK(t.at(999).key == BlockKey{0, 0});
    CHECK(t.at(1000).key == BlockKey{0, 1});
  }
  SUBCASE("seeded determinism and visit counts") {
    std::vector<SyntheticBlockSpec> prog = {block(0, LatencyDist::uniform(50, 150), PowerDist::gaussian(10, 2), 40),
                                            block(1, LatencyDist::two_point(10, 1000, 0.1), PowerDist::constant(3), 25)};
    for (auto sched : {Schedule::sequential, Schedule::round_robin}) {
      auto a = generate_timeline(prog, sched, 77);
      auto b = generate_timeline(prog, sched, 77);
      auto c = generate_timeline(prog, sched, 78);
      REQUIRE(a.segments.size() == b.segments.size());
      bool same = true;
      for (std::size_t i = 0; i < a.segments.size(); ++i)
        same = same && a.segments[i].end_tick == b.segments[i].end_tick && a.segments[i].watts == b.segments[i].watts;
      CHECK(same);
      CHECK(a.total_ticks() != c.total_ticks());
      std::map<BlockKey, int> visits;
      for (const auto& s : a.segments) {
        ++visits[s.key];
        CHECK(s.ticks() >= 1);
        CHECK(s.watts >= 0.0);
      }
      CHECK(visits[{0, 0}] == 40);
      CHECK(visits[{0, 1}] == 25);
    }
  }
  SUBCASE("round robin interleaves") {
    std::vector<SyntheticBlockSpec> prog = {block(0, LatencyDist::constant(1), PowerDist::constant(1), 3),
                                            block(1, LatencyDist::constant(1), PowerDist::constant(1), 3)};
    auto t = generate_timeline(prog, Schedule::round_robin, 1);
    std::vector<std::uint32_t> order;
    for (const auto& s : t.segments) order.push_back(s.key.block);
    CHECK(order == std::vector<std::uint32_t>{0, 1, 0, 1, 0, 1});
  }
  SUBCASE("invalid programs") {
    CHECK_THROWS_AS(generate_timeline({}, Schedule::sequential, 1), Error);
    std::vector<SyntheticBlockSpec> zero = {block(0, LatencyDist::constant(0), PowerDist::constant(1), 1)};
    CHECK_THROWS_AS(generate_timeline(zero, Schedule::sequential, 1), Error);
    std::vector<SyntheticBlockSpec> nok = {block(0, LatencyDist::constant(1), PowerDist::constant(1), 0)};
    CHECK_THROWS_AS(generate_timeline(nok, Schedule::sequential, 1), Error);
    std::vector<SyntheticBlockSpec> neg = {block(0, LatencyDist::constant(1), PowerDist::constant(-1), 1)};
    CHECK_THROWS_AS(generate_timeline(neg, Schedule::sequential, 1), Error);
    Timeline gap;
    gap.segments = {{{0, 0}, 0, 10, 1.0}, {{0, 1}, 11, 20, 1.0}};
    CHECK_THROWS_AS(validate(gap), Error);
  }
}

TEST_CASE("ground truth examples") {
  Timeline t;
  t.tick_hz = 1000;
  t.segments = {{{0, 0}, 0, 600, 10.0}, {{0, 1}, 600, 1000, 10.0}};
  auto g = true_totals(t);
  CHECK(g.keys.at(key(0)).t_s == doctest::Approx(0.6));
  CHECK(g.keys.at(key(0)).p == doctest::Approx(0.6));
  CHECK(g.t_exec_s == doctest::Approx(1.0));

  Timeline flat;
  flat.tick_hz = 1000;
  flat.segments = {{{0, 0}, 0, 700, 10.0}, {{0, 1}, 700, 1500, 10.0}, {{0, 0}, 1500, 2000, 10.0}};
  auto f = true_totals(flat);
  CHECK(f.t_exec_s == doctest::Approx(2.0));
  CHECK(f.e_total_j == doctest::Approx(20.0));
  CHECK(f.keys.at(key(0)).e_j == doctest::Approx(12.0));
  CHECK(f.keys.at(key(0)).mean_watts == doctest::Approx(10.0));
}

TEST_CASE("segment sums match a per-tick brute force") {
  prop::for_all("truth", 60, [](prop::Gen& g) {
    const std::size_t threads = g.u64(1, 3);
    std::vector<Timeline> slots;
    for (std::size_t s = 0; s < threads; ++s) {
      std::vector<SyntheticBlockSpec> prog;
      const auto nb = g.u64(1, 4);
      for (std::uint32_t b = 0; b < nb; ++b)
        prog.push_back(block(b, LatencyDist::uniform(1, g.u64(1, 60)), PowerDist::gaussian(g.real(1, 20), g.real(0, 5)),
                             g.u64(1, 20)));
      slots.push_back(generate_timeline(prog, g.coin() ? Schedule::sequential : Schedule::round_robin, g.u64(0, 1000)));
    }
    const auto truth = threads == 1 ? true_totals(slots[0]) : true_totals(slots);
    const auto oracle = brute_force(slots);
    CHECK(truth.total_ticks == oracle.total);
    REQUIRE(truth.keys.size() == oracle.ticks.size());
    double t_sum = 0.0, e_sum = 0.0;
    for (const auto& [k, ticks] : oracle.ticks) {
      REQUIRE(truth.keys.contains(k));
      const auto& e = truth.keys.at(k);
      CHECK(e.ticks == ticks);
      CHECK(e.e_j == doctest::Approx(oracle.energy.at(k) / 1e6).epsilon(1e-9));
      CHECK(e.p == doctest::Approx(static_cast<double>(ticks) / oracle.total));
      t_sum += e.t_s;
      e_sum += e.e_j;
    }
    CHECK(t_sum == doctest::Approx(truth.t_exec_s));
    CHECK(e_sum == doctest::Approx(truth.e_total_j));
  });
}

TEST_CASE("sample ticks") {
  SamplingPlan p;
  p.period_ticks = 100;
  p.jitter_enabled = false;
  p.first_offset = 30;
  auto ticks = sample_ticks(1000, p);
  CHECK(ticks == std::vector<std::uint64_t>{30, 130, 230, 330, 430, 530, 630, 730, 830, 930});

  prop::for_all("bounds", 100, [](prop::Gen& g) {
    SamplingPlan q;
    q.period_ticks = g.u64(1, 5000);
    q.jitter = g.real(0, 0.49);
    q.seed = g.u64(0, ~0ull);
    const auto total = g.u64(1, 200'000);
    auto t = sample_ticks(total, q);
    const auto bound = static_cast<std::uint64_t>(std::floor(q.jitter * static_cast<double>(q.period_ticks)));
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(t[i] < total);
      if (i > 0) {
        CHECK(t[i] - t[i - 1] + 2 * bound >= q.period_ticks);
        CHECK(t[i] - t[i - 1] <= q.period_ticks + 2 * bound);
      }
    }
    const double expect = static_cast<double>(total) / static_cast<double>(q.period_ticks);
    CHECK(static_cast<double>(t.size()) >= expect - 2.0);
    CHECK(static_cast<double>(t.size()) <= expect + 2.0);
  });

  p.jitter = 0.5;
  p.jitter_enabled = true;
  CHECK_THROWS_AS(sample_ticks(1000, p), Error);
}

TEST_CASE("census sampling reproduces truth exactly") {
  std::vector<SyntheticBlockSpec> prog = {block(0, LatencyDist::uniform(3, 40), PowerDist::constant(9.0), 50),
                                          block(1, LatencyDist::constant(17), PowerDist::constant(12.0), 70),
                                          block(2, LatencyDist::two_point(1, 90, 0.3), PowerDist::constant(4.5), 30)};
  auto t = generate_timeline(prog, Schedule::round_robin, 9);
  auto truth = true_totals(t);
  auto samples = sample_timeline(t, census());
  CHECK(samples.size() == t.total_ticks());
  auto prof = profile_of(samples, truth.t_exec_s);
  for (const auto& [k, e] : truth.keys) {
    const auto* est = prof.find(k);
    REQUIRE(est);
    CHECK(est->n_k == e.ticks);
    CHECK(est->p_hat == e.p);
    // Constant power per key: the energy identity holds.
    CHECK(est->e_hat == doctest::Approx(e.e_j).epsilon(1e-12));
  }
  auto err = evaluate(prof, truth);
  CHECK(err.mare_p == 0.0);
  CHECK(err.mare_e == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(err.unmatched == 0);
}

TEST_CASE("constant 9.5 W block gives exact mean power") {
  std::vector<SyntheticBlockSpec> prog = {block(0, LatencyDist::uniform(100, 300), PowerDist::constant(9.5), 50'000)};
  auto t = generate_timeline(prog, Schedule::sequential, 1);
  SamplingPlan p;
  p.period_ticks = t.total_ticks() / 10'000;
  auto samples = sample_timeline(t, p);
  CHECK(samples.size() >= 9'998);
  auto prof = profile_of(samples, t.seconds());
  CHECK(prof.estimates[0].pow_hat == doctest::Approx(9.5).epsilon(0.01 / 9.5));
}

TEST_CASE("block with 47.5 J of truth lies inside its energy interval") {
  // 9.5 W for 5 s out of a run of about 10 s.
  std::vector<SyntheticBlockSpec> prog = {block(0, LatencyDist::constant(2'500), PowerDist::constant(9.5), 2'000),
                                          block(1, LatencyDist::uniform(1'000, 4'000), PowerDist::constant(6.0), 2'000)};
  auto t = generate_timeline(prog, Schedule::round_robin, 1);
  auto truth = true_totals(t);
  CHECK(truth.keys.at(key(0)).e_j == doctest::Approx(47.5));
  SamplingPlan p;
  p.seed = 4;
  auto prof = profile_of(sample_timeline(t, p), t.seconds());
  const auto* est = prof.find(key(0));
  REQUIRE(est);
  CHECK(est->e_ci.contains(47.5));
}

TEST_CASE("two blocks at 9 W and 12 W converge to half each and a 9:12 energy ratio") {
  std::vector<SyntheticBlockSpec> prog = {block(0, LatencyDist::uniform(100, 900), PowerDist::constant(9.0), 20'000),
                                          block(1, LatencyDist::uniform(400, 600), PowerDist::constant(12.0), 20'000)};
  auto t = generate_timeline(prog, Schedule::round_robin, 5);
  double last_gap = 1.0;
  for (std::uint64_t period : {10'000ull, 1'000ull, 100ull}) {
    SamplingPlan p;
    p.period_ticks = period;
    p.seed = 2;
    auto prof = profile_of(sample_timeline(t, p), t.seconds());
    const double pa = prof.find(key(0))->p_hat;
    const double ratio = prof.find(key(0))->e_hat / prof.find(key(1))->e_hat;
    const double truth_p = true_totals(t).keys.at(key(0)).p;
    CHECK(truth_p == doctest::Approx(0.5).epsilon(0.01));
    const double gap = std::abs(pa - 0.5);
    CHECK(gap <= std::max(last_gap, 0.02));
    last_gap = gap;
    if (period == 100) CHECK(ratio == doctest::Approx(9.0 / 12.0).epsilon(0.02));
  }
}

TEST_CASE("aliasing") {
  // A and B alternate with a 10,000-tick cycle, the sampling period.
  std::vector<SyntheticBlockSpec> prog = {block(0, LatencyDist::constant(5'000), PowerDist::constant(9.0), 500),
                                          block(1, LatencyDist::constant(5'000), PowerDist::constant(12.0), 500)};
  auto t = generate_timeline(prog, Schedule::round_robin, 1);
  auto truth = true_totals(t);

  SUBCASE("jitter off: one block gets every sample") {
    for (std::uint64_t offset : {0ull, 2'500ull, 7'000ull}) {
      SamplingPlan p;
      p.period_ticks = 10'000;
      p.jitter_enabled = false;
      p.first_offset = offset;
      auto prof = profile_of(sample_timeline(t, p), t.seconds());
      REQUIRE(prof.estimates.size() == 1);
      CHECK(prof.estimates[0].p_hat == 1.0);
    }
  }
  SUBCASE("jitter on: both blocks inside their intervals") {
    SamplingPlan p;
    p.period_ticks = 10'000;
    p.jitter = 0.49;
    p.seed = 11;
    auto prof = profile_of(sample_timeline(t, p), t.seconds());
    REQUIRE(prof.estimates.size() == 2);
    for (const auto& e : prof.estimates) CHECK(e.p_ci.contains(truth.keys.at(e.key).p));
  }
}

TEST_CASE("trailing window power matches a brute-force average") {
  prop::for_all("window", 30, [](prop::Gen& g) {
    std::vector<SyntheticBlockSpec> prog = {block(0, LatencyDist::uniform(1, 50), PowerDist::gaussian(10, 3), 40),
                                            block(1, LatencyDist::uniform(1, 50), PowerDist::gaussian(4, 1), 40)};
    auto t = generate_timeline(prog, Schedule::round_robin, g.u64(0, 99));
    SamplingPlan p;
    p.period_ticks = g.u64(2, 60);
    p.seed = g.u64(0, 99);
    p.power_mode = PowerMode::trailing_window;
    auto ticks = sample_ticks(t.total_ticks(), p);
    auto samples = sample_timeline(t, p);
    REQUIRE(samples.size() == ticks.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const std::uint64_t hi = ticks[i] + 1;
      const std::uint64_t lo = hi > p.period_ticks ? hi - p.period_ticks : 0;
      double sum = 0.0;
      for (std::uint64_t k = lo; k < hi; ++k) sum += t.at(k).watts;
      CHECK(samples[i].power.readings[0].watts == doctest::Approx(sum / static_cast<double>(hi - lo)));
      CHECK(samples[i].key.blocks[0] == t.at(ticks[i]).key);
    }
  });
}

TEST_CASE("multi-thread sampling and truth") {
  std::vector<SyntheticBlockSpec> p0 = {block(0, LatencyDist::constant(10), PowerDist::constant(2), 10)};
  std::vector<SyntheticBlockSpec> p1 = {block(0, LatencyDist::constant(5), PowerDist::constant(3), 4),
                                        block(1, LatencyDist::constant(5), PowerDist::constant(4), 4)};
  std::vector<Timeline> slots = {generate_timeline(p0, Schedule::sequential, 1),
                                 generate_timeline(p1, Schedule::sequential, 1)};
  auto truth = true_totals(slots);
  CHECK(truth.total_ticks == 100);
  const CombinationKey a_a({{0, 0}, {0, 0}});
  const CombinationKey a_b({{0, 0}, {0, 1}});
  const CombinationKey a_x({{0, 0}, BlockKey::absent()});
  CHECK(truth.keys.at(a_a).ticks == 20);
  CHECK(truth.keys.at(a_b).ticks == 20);
  CHECK(truth.keys.at(a_x).ticks == 60);
  CHECK(truth.keys.at(a_b).mean_watts == doctest::Approx(6.0));
  CHECK(truth.keys.at(a_x).mean_watts == doctest::Approx(2.0));

  auto samples = sample_timeline(std::span<const Timeline>(slots), census());
  auto prof = profile_of(samples, truth.t_exec_s);
  CHECK(prof.thread_slots == 2);
  CHECK(evaluate(prof, truth).mare_e == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("evaluate") {
  std::vector<SyntheticBlockSpec> prog = {block(0, LatencyDist::constant(30), PowerDist::constant(9), 10),
                                          block(1, LatencyDist::constant(70), PowerDist::constant(5), 10)};
  auto t = generate_timeline(prog, Schedule::round_robin, 1);
  auto truth = true_totals(t);
  auto prof = profile_of(sample_timeline(t, census()), t.seconds());

  auto exact = evaluate(prof, truth);
  CHECK(exact.mare_t == 0.0);
  CHECK(exact.mare_pow == 0.0);
  CHECK(exact.valid == 2);

  auto perturbed = prof;
  for (auto& e : perturbed.estimates)
    if (e.key == key(0)) e.t_hat *= 1.10;
  auto err = evaluate(perturbed, truth);
  for (const auto& k : err.keys) CHECK(k.rel_t == doctest::Approx(k.key == key(0) ? 0.10 : 0.0));
  CHECK(err.mare_t == doctest::Approx(0.05));

  // A key never sampled counts as a full miss.
  auto missing = prof;
  missing.estimates.erase(missing.estimates.begin());
  auto m = evaluate(missing, truth);
  CHECK(m.keys[0].rel_e == 1.0);

  Profile other = prof;
  for (auto& e : other.estimates) e.key = CombinationKey::single({5, e.key.blocks[0].block});
  CHECK_THROWS_AS(evaluate(other, truth), Error);
  other.estimates.insert(other.estimates.begin(), prof.estimates[0]);
  CHECK(evaluate(other, truth).unmatched == 2);
}

TEST_CASE("scenario files") {
  const char* text = R"({
    "tick_hz": 1e6, "seed": 7, "replications": 3, "alpha": 0.1, "schedule": "sequential",
    "threads": 2, "granularity": "combination",
    "sampling": {"period_ticks": 500, "jitter": 0.2, "first_offset": 3, "power_mode": "trailing_window", "domain": "DRAM"},
    "blocks": [
      {"label": "hot", "latency": 120, "power": 9.5, "iterations": 10},
      {"label": "warm", "latency": {"dist": "uniform", "min": 5, "max": 9}, "power": {"dist": "gaussian", "mean": 4, "sd": 1}, "iterations": 2},
      {"label": "odd", "latency": {"dist": "two_point", "low": 1, "high": 100, "p_high": 0.25}, "power": {"dist": "constant", "watts": 2}, "iterations": 1}
    ]})";
  auto sc = parse_scenario(text);
  CHECK(sc.seed == 7);
  CHECK(sc.replications == 3);
  CHECK(sc.alpha == 0.1);
  CHECK(sc.threads == 2);
  CHECK(sc.schedule == Schedule::sequential);
  CHECK(sc.sampling.period_ticks == 500);
  CHECK(sc.sampling.first_offset == 3u);
  CHECK(sc.sampling.power_mode == PowerMode::trailing_window);
  CHECK(sc.sampling.domain.name() == "DRAM");
  REQUIRE(sc.program.size() == 3);
  CHECK(sc.program[0].latency.mean() == 120.0);
  CHECK(sc.program[1].latency.mean() == 7.0);
  CHECK(sc.program[2].latency.mean() == doctest::Approx(0.75 + 25.0));
  CHECK(sc.program[1].power.kind == PowerDist::Kind::gaussian);
  CHECK(sc.program[2].key == BlockKey{0, 2});

  CHECK_THROWS_AS(parse_scenario("{"), Error);
  CHECK_THROWS_AS(parse_scenario(R"({"blocks": []})"), Error);
  CHECK_THROWS_AS(parse_scenario(R"({"blocks": [{"label": "x", "latency": 1, "power": 1, "iterations": 1}], "schedule": "random"})"), Error);
  CHECK_THROWS_AS(parse_scenario(R"({"blocks": [{"label": "x", "latency": {"dist": "zipf"}, "power": 1, "iterations": 1}]})"), Error);
  CHECK_THROWS_AS(parse_scenario(R"({"blocks": [{"label": "x", "latency": 1, "power": 1, "iterations": 1}], "alpha": 2})"), Error);
  CHECK_THROWS_AS(parse_scenario(R"({"blocks": [{"label": "x", "latency": 1, "power": 1, "iterations": 1}], "sampling": {"jitter": 0.5}})"), Error);
  CHECK_THROWS_AS(load_scenario("/nonexistent/s.json"), Error);

  auto shipped = load_scenario(std::filesystem::path(ALEA_SOURCE_DIR) / "scenarios" / "desk_scale.json");
  CHECK(shipped.program.size() == 10);
}

TEST_CASE("replications are deterministic") {
  auto sc = parse_scenario(R"({"seed": 3, "blocks": [
      {"label": "a", "latency": {"dist": "uniform", "min": 100, "max": 300}, "power": 8, "iterations": 2000},
      {"label": "b", "latency": 50000, "power": {"dist": "gaussian", "mean": 12, "sd": 2}, "iterations": 10}]})");
  auto r1 = run_replication(sc, 4);
  auto r2 = run_replication(sc, 4);
  auto r3 = run_replication(sc, 5);
  CHECK(r1.samples.size() == r2.samples.size());
  CHECK(r1.errors.mare_e == r2.errors.mare_e);
  CHECK(r1.truth.t_exec_s != r3.truth.t_exec_s);

  auto summary = simulate(sc, 5);
  CHECK(summary.replications == 5);
  CHECK(summary.blocks.size() == 2);
  CHECK(summary.p_coverage >= 0.0);
  CHECK(summary.p_coverage <= 1.0);
  const auto json = summary_to_json(summary);
  CHECK(json.find("\"coverage\"") != std::string::npos);
  CHECK_THROWS_AS(simulate(sc, 0), Error);
}

TEST_CASE("sample stream survives the trace format") {
  auto sc = parse_scenario(R"({"seed": 1, "threads": 2, "blocks": [
      {"label": "a", "latency": 300, "power": 8, "iterations": 300},
      {"label": "b", "latency": 700, "power": 5, "iterations": 100}]})");
  auto rep = run_replication(sc, 0);
  auto trace = to_trace(rep.samples, rep.truth.t_exec_s, sc.sampling, sc.tick_hz);
  CHECK(trace.meta.t_exec_ns.has_value());
  CHECK(trace.meta.period_ns == 10'000'000);
  CHECK(trace.meta.jitter == 0.05);
  CHECK(trace.meta.spacing_min_ns >= 9'000'000);
  CHECK(trace.meta.spacing_max_ns <= 11'000'000);

  Symbolizer symbols({synthetic_blockmap(sc.program)});
  auto records = to_records(trace.samples, symbols);
  REQUIRE(records.size() == rep.samples.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].key == rep.samples[i].key);
    CHECK(records[i].power == rep.samples[i].power);
  }
  CHECK(symbols.label(BlockKey{0, 1}) == "b");
  CHECK(synthetic_address({0, 1}) == 0x11000);
}
