#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "alea/power.hpp"
#include "alea/trace.hpp"

namespace alea {

struct SamplerConfig {
  std::int64_t period_ns = 10'000'000;
  /// Uniform per-sample offset bound as a fraction of the period; must stay below 0.5.
  double jitter = 0.05;
  bool jitter_enabled = true;
  /// Fixed offset of the first sample; drawn from [0, period) when unset.
  std::optional<std::int64_t> first_offset_ns;
  std::uint64_t seed = 0;
  std::optional<int> cpu_affinity;
  std::optional<std::uint64_t> max_samples;
  std::optional<std::int64_t> max_duration_ns;

  /// Throws invalid_input when the invariants do not hold.
  void validate() const;
  std::int64_t jitter_bound_ns() const;
};

enum class WaitResult { deadline, exited, interrupted };

/// What the systematic loop drives. Implementations own the clock, so a mock
/// target can run on virtual time.
class SamplingTarget {
 public:
  virtual ~SamplingTarget() = default;

  /// Profile-relative nanoseconds; 0 is the target's start.
  virtual std::int64_t now_ns() = 0;
  /// Blocks until the deadline, the target's exit, or an interrupt request.
  virtual WaitResult wait_until(std::int64_t deadline_ns) = 0;
  /// Stops every thread, reads each instruction pointer, reads `power` once,
  /// resumes. nullopt once the target has exited.
  virtual std::optional<RawSample> sample_once(PowerSource& power) = 0;
  /// Exit instant (profile-relative) once known.
  virtual std::optional<std::int64_t> exit_time_ns() const = 0;
  virtual TargetOutcome outcome() const = 0;
  virtual int exit_code() const { return 0; }
};

class SampleSink {
 public:
  virtual ~SampleSink() = default;
  /// Throws on write failure.
  virtual void write(const RawSample& sample) = 0;
  virtual void close() {}
};

/// Collects samples in memory.
class VectorSink final : public SampleSink {
 public:
  void write(const RawSample& sample) override { samples.push_back(sample); }
  std::vector<RawSample> samples;
};

/// Producer/consumer hand-off: the sampling thread enqueues, a writer thread
/// drains into `inner`. A failure in the writer surfaces on the next write.
class QueuedSink final : public SampleSink {
 public:
  QueuedSink(SampleSink& inner, std::size_t capacity = 4096);
  ~QueuedSink() override;
  void write(const RawSample& sample) override;
  void close() override;

 private:
  void drain();

  SampleSink& inner_;
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable changed_;
  std::deque<RawSample> queue_;
  bool closed_ = false;
  std::exception_ptr failure_;
  std::thread worker_;
};

struct SamplerReport {
  std::int64_t t_exec_ns = 0;
  std::uint64_t n = 0;
  std::int64_t stop_ns = 0;
  std::int64_t spacing_min_ns = 0;
  std::int64_t spacing_max_ns = 0;
  double spacing_mean_ns = 0.0;
  double spacing_sd_ns = 0.0;
  std::int64_t lateness_max_ns = 0;
  std::int64_t first_offset_ns = 0;
  std::vector<std::int64_t> scheduled_ns;  // planned instants, for schedule checks
  TargetOutcome outcome = TargetOutcome::unknown;
  int exit_code = 0;
  bool partial = false;
  std::uint64_t flagged_readings = 0;

  double overhead_fraction() const {
    return t_exec_ns > 0 ? static_cast<double>(stop_ns) / static_cast<double>(t_exec_ns) : 0.0;
  }
  /// Copies the run-level facts into trace metadata.
  void fill(TraceMeta& meta) const;
};

/// Systematic sampling on an absolute schedule:
///   instant_i = first_offset + i * period + jitter_i,  jitter_i ~ U[-bound, bound]
/// Runs until the target exits, a stop condition triggers, or an interrupt.
/// A sink failure ends the run with `partial` set.
SamplerReport run_systematic(SamplingTarget& target, const SamplerConfig& config, PowerSource& power,
                             SampleSink& sink);

/// Deterministic target on a virtual clock. `ip_at(thread, t_ns)` gives the
/// instruction pointer of each thread; each sample stalls the target by
/// `stop_cost_ns`, which extends its run time like a real suspension would.
class MockTarget final : public SamplingTarget {
 public:
  using IpFunction = std::function<std::uint64_t(std::size_t thread, std::int64_t t_ns)>;

  MockTarget(std::int64_t duration_ns, std::size_t threads, IpFunction ip_at, std::int64_t stop_cost_ns = 0);

  std::int64_t now_ns() override { return now_; }
  WaitResult wait_until(std::int64_t deadline_ns) override;
  std::optional<RawSample> sample_once(PowerSource& power) override;
  std::optional<std::int64_t> exit_time_ns() const override;
  TargetOutcome outcome() const override;

 private:
  std::int64_t end_ns() const { return duration_ + stalled_; }

  std::int64_t duration_;
  std::size_t threads_;
  IpFunction ip_at_;
  std::int64_t stop_cost_;
  std::int64_t now_ = 0;
  std::int64_t stalled_ = 0;
  std::uint64_t seq_ = 0;
};

/// Pins the calling thread to `core`. Returns false when the core is not available.
bool pin_current_thread(int core);

}  // namespace alea
