#include "alea/sampler.hpp"

#include <sched.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "alea/error.hpp"

namespace alea {

void SamplerConfig::validate() const {
  if (period_ns <= 0) throw Error(ErrorKind::invalid_input, "sampling period must be positive");
  if (!(jitter >= 0.0 && jitter < 0.5))
    throw Error(ErrorKind::invalid_input, "jitter bound must lie in [0, period/2)");
  if (first_offset_ns && (*first_offset_ns < 0 || *first_offset_ns >= period_ns))
    throw Error(ErrorKind::invalid_input, "first offset must lie in [0, period)");
  if (max_duration_ns && *max_duration_ns <= 0)
    throw Error(ErrorKind::invalid_input, "max duration must be positive");
}

std::int64_t SamplerConfig::jitter_bound_ns() const {
  if (!jitter_enabled) return 0;
  return static_cast<std::int64_t>(std::floor(jitter * static_cast<double>(period_ns)));
}

void SamplerReport::fill(TraceMeta& meta) const {
  meta.t_exec_ns = t_exec_ns;
  meta.stop_ns = stop_ns;
  meta.spacing_min_ns = spacing_min_ns;
  meta.spacing_max_ns = spacing_max_ns;
  meta.spacing_mean_ns = spacing_mean_ns;
  meta.spacing_sd_ns = spacing_sd_ns;
  meta.lateness_max_ns = lateness_max_ns;
  meta.outcome = outcome;
  meta.exit_code = exit_code;
  meta.partial = partial;
}

QueuedSink::QueuedSink(SampleSink& inner, std::size_t capacity)
    : inner_(inner), capacity_(std::max<std::size_t>(1, capacity)), worker_([this] { drain(); }) {}

QueuedSink::~QueuedSink() {
  try {
    close();
  } catch (...) {
  }
}

void QueuedSink::write(const RawSample& sample) {
  std::unique_lock lock(mutex_);
  changed_.wait(lock, [&] { return queue_.size() < capacity_ || failure_ || closed_; });
  if (failure_) std::rethrow_exception(failure_);
  if (closed_) throw Error(ErrorKind::io, "write to a closed sample sink");
  queue_.push_back(sample);
  changed_.notify_all();
}

void QueuedSink::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  changed_.notify_all();
  if (worker_.joinable()) worker_.join();
  if (failure_) std::rethrow_exception(std::exchange(failure_, nullptr));
  inner_.close();
}

void QueuedSink::drain() {
  std::unique_lock lock(mutex_);
  while (true) {
    changed_.wait(lock, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return;
    RawSample s = std::move(queue_.front());
    queue_.pop_front();
    changed_.notify_all();
    lock.unlock();
    try {
      inner_.write(s);
    } catch (...) {
      lock.lock();
      failure_ = std::current_exception();
      queue_.clear();
      changed_.notify_all();
      return;
    }
    lock.lock();
  }
}

SamplerReport run_systematic(SamplingTarget& target, const SamplerConfig& config, PowerSource& power,
                             SampleSink& sink) {
  config.validate();
  if (config.cpu_affinity) pin_current_thread(*config.cpu_affinity);

  std::mt19937_64 rng(config.seed);
  const std::int64_t period = config.period_ns;
  const std::int64_t bound = config.jitter_bound_ns();

  SamplerReport report;
  report.first_offset_ns = config.first_offset_ns
                               ? *config.first_offset_ns
                               : std::uniform_int_distribution<std::int64_t>(0, period - 1)(rng);
  std::uniform_int_distribution<std::int64_t> jitter(-bound, bound);

  power.start(target.now_ns());

  std::int64_t last_wall = 0;
  double spacing_sum = 0.0;
  double spacing_sq = 0.0;
  std::uint64_t spacings = 0;

  for (std::int64_t i = 0;; ++i) {
    if (config.max_samples && report.n >= *config.max_samples) break;
    const std::int64_t offset = bound > 0 ? jitter(rng) : 0;
    const std::int64_t scheduled = std::max<std::int64_t>(0, report.first_offset_ns + i * period + offset);
    if (config.max_duration_ns && scheduled > *config.max_duration_ns) break;

    const auto waited = target.wait_until(scheduled);
    if (waited != WaitResult::deadline) break;
    report.lateness_max_ns = std::max(report.lateness_max_ns, target.now_ns() - scheduled);

    auto sample = target.sample_once(power);
    if (!sample) break;
    sample->seq = report.n;
    sample->power.timestamp_ns = sample->wall_time_ns;
    report.stop_ns += sample->stop_ns;
    report.scheduled_ns.push_back(scheduled);

    if (report.n > 0) {
      const auto gap = sample->wall_time_ns - last_wall;
      report.spacing_min_ns = spacings == 0 ? gap : std::min(report.spacing_min_ns, gap);
      report.spacing_max_ns = std::max(report.spacing_max_ns, gap);
      spacing_sum += static_cast<double>(gap);
      spacing_sq += static_cast<double>(gap) * static_cast<double>(gap);
      ++spacings;
    }
    last_wall = sample->wall_time_ns;

    try {
      sink.write(*sample);
    } catch (...) {
      report.partial = true;
      break;
    }
    ++report.n;
  }

  if (!report.partial) {
    try {
      sink.close();
    } catch (...) {
      report.partial = true;
    }
  }

  if (spacings > 0) {
    report.spacing_mean_ns = spacing_sum / static_cast<double>(spacings);
    const double var = spacing_sq / static_cast<double>(spacings) - report.spacing_mean_ns * report.spacing_mean_ns;
    report.spacing_sd_ns = var > 0.0 ? std::sqrt(var) : 0.0;
  }
  const auto exit = target.exit_time_ns();
  report.t_exec_ns = exit ? *exit : target.now_ns();
  report.outcome = target.outcome();
  report.exit_code = target.exit_code();
  report.flagged_readings = power.flagged_count();
  return report;
}

MockTarget::MockTarget(std::int64_t duration_ns, std::size_t threads, IpFunction ip_at, std::int64_t stop_cost_ns)
    : duration_(duration_ns), threads_(threads), ip_at_(std::move(ip_at)), stop_cost_(stop_cost_ns) {
  if (duration_ns <= 0 || threads == 0 || !ip_at_ || stop_cost_ns < 0)
    throw Error(ErrorKind::invalid_input, "mock target needs a positive duration and at least one thread");
}

WaitResult MockTarget::wait_until(std::int64_t deadline_ns) {
  if (deadline_ns >= end_ns()) {
    now_ = std::max(now_, end_ns());
    return WaitResult::exited;
  }
  now_ = std::max(now_, deadline_ns);
  return WaitResult::deadline;
}

std::optional<RawSample> MockTarget::sample_once(PowerSource& power) {
  if (now_ >= end_ns()) return std::nullopt;
  RawSample s;
  s.seq = seq_++;
  s.wall_time_ns = now_;
  const std::int64_t progress = now_ - stalled_;
  for (std::size_t t = 0; t < threads_; ++t)
    s.threads.push_back({static_cast<int>(1000 + t), ip_at_(t, progress)});
  auto p = power.read(now_);
  if (p) s.power = std::move(*p);
  s.stop_ns = stop_cost_;
  stalled_ += stop_cost_;
  now_ += stop_cost_;
  return s;
}

std::optional<std::int64_t> MockTarget::exit_time_ns() const {
  if (now_ >= end_ns()) return end_ns();
  return std::nullopt;
}

TargetOutcome MockTarget::outcome() const {
  return now_ >= end_ns() ? TargetOutcome::exited : TargetOutcome::running;
}

bool pin_current_thread(int core) {
  if (core < 0 || core >= CPU_SETSIZE) return false;
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(core, &set);
  return sched_setaffinity(0, sizeof(set), &set) == 0;
}

}  // namespace alea
