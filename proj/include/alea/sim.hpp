#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alea/blockmap.hpp"
#include "alea/model.hpp"
#include "alea/trace.hpp"

namespace alea::sim {

struct LatencyDist {
  enum class Kind { constant, uniform, two_point };
  Kind kind = Kind::constant;
  std::uint64_t a = 1;  // constant value, uniform min, or two-point low
  std::uint64_t b = 1;  // uniform max or two-point high
  double p_b = 0.5;     // two-point probability of `b`

  static LatencyDist constant(std::uint64_t ticks) { return {Kind::constant, ticks, ticks, 0.0}; }
  static LatencyDist uniform(std::uint64_t lo, std::uint64_t hi) { return {Kind::uniform, lo, hi, 0.0}; }
  static LatencyDist two_point(std::uint64_t lo, std::uint64_t hi, double p_hi) {
    return {Kind::two_point, lo, hi, p_hi};
  }
  double mean() const;
};

struct PowerDist {
  enum class Kind { constant, gaussian };
  Kind kind = Kind::constant;
  double mean = 0.0;
  double sd = 0.0;  // gaussian only; draws are truncated at 0

  static PowerDist constant(double watts) { return {Kind::constant, watts, 0.0}; }
  static PowerDist gaussian(double mean, double sd) { return {Kind::gaussian, mean, sd}; }
};

struct SyntheticBlockSpec {
  BlockKey key;
  std::string label;
  LatencyDist latency;
  PowerDist power;
  std::uint64_t iterations = 1;
};

enum class Schedule { sequential, round_robin };

struct Segment {
  BlockKey key;
  std::uint64_t start_tick = 0;
  std::uint64_t end_tick = 0;
  double watts = 0.0;

  std::uint64_t ticks() const { return end_tick - start_tick; }
};

/// Contiguous segments covering [0, total_ticks).
struct Timeline {
  std::vector<Segment> segments;
  double tick_hz = 1e6;

  std::uint64_t total_ticks() const { return segments.empty() ? 0 : segments.back().end_tick; }
  double seconds() const { return static_cast<double>(total_ticks()) / tick_hz; }
  /// Segment covering `tick`; throws invalid_input past the end.
  const Segment& at(std::uint64_t tick) const;
};

/// Sequential runs every iteration of a block before the next one. Round-robin
/// interleaves blocks evenly: the next visit goes to the block with the
/// smallest (done + 0.5) / iterations, so every block spreads over the run.
/// Throws invalid_input on an empty program or a spec breaking its invariants.
Timeline generate_timeline(std::span<const SyntheticBlockSpec> program, Schedule schedule, std::uint64_t seed,
                           double tick_hz = 1e6);

/// Checks contiguity and coverage; throws invalid_input otherwise.
void validate(const Timeline& timeline);

struct TruthEntry {
  std::uint64_t ticks = 0;
  double p = 0.0;
  double t_s = 0.0;
  double mean_watts = 0.0;
  double e_j = 0.0;
};

struct GroundTruth {
  std::map<CombinationKey, TruthEntry> keys;
  double t_exec_s = 0.0;
  double e_total_j = 0.0;
  std::uint64_t total_ticks = 0;
};

/// Exact per-key sums over segments. Several timelines are the thread slots of
/// one run: keys are per-tick combinations (ABSENT past a slot's end) and the
/// power at a tick is the sum over slots.
GroundTruth true_totals(const Timeline& timeline);
GroundTruth true_totals(std::span<const Timeline> slots);

enum class PowerMode { instantaneous, trailing_window };

struct SamplingPlan {
  std::uint64_t period_ticks = 10'000;
  double jitter = 0.05;  // bound as a fraction of the period, in [0, 0.5)
  bool jitter_enabled = true;
  std::optional<std::uint64_t> first_offset;
  std::uint64_t seed = 0;
  PowerMode power_mode = PowerMode::instantaneous;
  PowerDomain domain{PowerDomain::Kind::pkg};
};

/// Sampled ticks: first_offset + i * period + U[-bound, bound], kept inside the run.
std::vector<std::uint64_t> sample_ticks(std::uint64_t total_ticks, const SamplingPlan& plan);

/// Systematic sampling of the simulated population. Each record carries the
/// covering key and the power at the tick, or the mean power over the
/// preceding period in trailing-window mode.
std::vector<SampleRecord> sample_timeline(const Timeline& timeline, const SamplingPlan& plan);
std::vector<SampleRecord> sample_timeline(std::span<const Timeline> slots, const SamplingPlan& plan);

struct KeyError {
  CombinationKey key;
  TruthEntry truth;
  std::uint64_t n_k = 0;
  double rel_p = 0.0;
  double rel_t = 0.0;
  double rel_pow = 0.0;
  double rel_e = 0.0;
  bool ci_valid = false;
  bool p_covered = false;
  bool pow_covered = false;
  bool pow_ci_computable = false;
  bool e_covered = false;
};

struct ErrorReport {
  std::vector<KeyError> keys;
  double mare_p = 0.0;
  double mare_t = 0.0;
  double mare_pow = 0.0;
  double mare_e = 0.0;
  std::size_t valid = 0;  // keys with ci_valid
  std::size_t p_covered = 0;
  std::size_t pow_covered = 0;
  std::size_t e_covered = 0;
  std::size_t unmatched = 0;  // profile keys absent from the truth, UNKNOWN excluded
};

/// Relative errors of every truth key; a key never sampled counts with zero
/// estimates. Coverage counts only keys with ci_valid.
/// Throws invalid_input when no truth key appears in the profile.
ErrorReport evaluate(const Profile& profile, const GroundTruth& truth);

struct Scenario {
  std::vector<SyntheticBlockSpec> program;
  Schedule schedule = Schedule::round_robin;
  std::size_t threads = 1;
  double tick_hz = 1e6;
  SamplingPlan sampling;
  double alpha = 0.05;
  Granularity granularity = Granularity::combination;
  std::uint64_t seed = 1;
  std::size_t replications = 1;
};

/// Throws parse on malformed JSON or invalid_input on bad values.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// One run: the timelines (one per thread slot), truth, samples and profile.
struct Replication {
  std::vector<Timeline> slots;
  GroundTruth truth;
  std::vector<SampleRecord> samples;
  Profile profile;
  ErrorReport errors;
};

/// Replication `r` uses seeds derived from scenario.seed + r.
Replication run_replication(const Scenario& scenario, std::size_t r);

struct BlockSummary {
  BlockKey key;
  std::string label;
  double mean_latency_ticks = 0.0;
  double mare_t = 0.0;
  double mare_e = 0.0;
};

struct SimulationSummary {
  std::size_t replications = 0;
  double mare_t = 0.0;  // averaged over replications
  double mare_pow = 0.0;
  double mare_e = 0.0;
  std::size_t valid_pairs = 0;
  double p_coverage = 0.0;
  double pow_coverage = 0.0;
  double e_coverage = 0.0;
  std::vector<BlockSummary> blocks;  // single-thread scenarios only
};

SimulationSummary simulate(const Scenario& scenario, std::size_t replications);
std::string summary_to_json(const SimulationSummary& summary);

/// Map placing block i at [0x10000 + i * 0x1000, +0x1000) in module "sim".
BlockMap synthetic_blockmap(std::span<const SyntheticBlockSpec> program);
std::uint64_t synthetic_address(BlockKey key);

/// Sample stream as a trace the replay path reads back unchanged. Thread slot
/// s becomes tid 1 + s; ABSENT slots are left out.
Trace to_trace(std::span<const SampleRecord> samples, double t_exec_s, const SamplingPlan& plan, double tick_hz);

}  // namespace alea::sim
