#pragma once

#include <sys/types.h>

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "alea/blockmap.hpp"
#include "alea/sampler.hpp"

namespace alea {

/// A live process under ptrace control. Threads are seized without stopping
/// them, interrupted together for each sample, and resumed right after the
/// power read. New threads are picked up from /proc/<pid>/task at every
/// sample. Destruction detaches from any thread still alive, so the target is
/// never left stopped.
///
/// The constructing thread must not be the only one receiving SIGCHLD, SIGINT
/// or SIGTERM: call block_control_signals() before starting other threads.
class PtraceTarget final : public SamplingTarget {
 public:
  /// fork + exec. The child keeps the profiler's environment and stdio.
  /// `avoid_core` keeps the target off the control loop's core when the
  /// machine has another one.
  static std::unique_ptr<PtraceTarget> spawn(const std::vector<std::string>& argv,
                                             std::optional<int> avoid_core = std::nullopt);
  static std::unique_ptr<PtraceTarget> attach(pid_t pid, std::optional<int> avoid_core = std::nullopt);

  ~PtraceTarget() override;
  PtraceTarget(const PtraceTarget&) = delete;
  PtraceTarget& operator=(const PtraceTarget&) = delete;

  pid_t pid() const noexcept { return pid_; }
  bool spawned() const noexcept { return spawned_; }
  std::vector<pid_t> threads() const;
  /// Executable mappings seen so far; re-read at samples 1, 2, 4, 8, ...
  const std::vector<ModuleMapping>& mappings() const noexcept { return mappings_; }

  std::int64_t now_ns() override;
  WaitResult wait_until(std::int64_t deadline_ns) override;
  std::optional<RawSample> sample_once(PowerSource& power) override;
  std::optional<std::int64_t> exit_time_ns() const override { return exit_ns_; }
  TargetOutcome outcome() const override;
  int exit_code() const override { return exit_code_; }

  /// Lets every thread run untraced. Idempotent.
  void detach();
  /// SIGKILL and reap; only meaningful for spawned targets.
  void kill_and_reap();

  /// Blocks SIGCHLD, SIGINT and SIGTERM in the calling thread; the control loop
  /// consumes them synchronously.
  static void block_control_signals();

 private:
  struct ThreadState {
    bool stopped = false;
    int pending_signal = 0;
  };

  PtraceTarget(pid_t pid, bool spawned, std::optional<int> avoid_core);

  void refresh_threads();
  void seize(pid_t tid);
  void drain_events();
  /// Returns true when `tid` is now stopped for us.
  bool handle_status(pid_t tid, int status, bool sampling);
  void thread_gone(pid_t tid, int status);
  std::optional<std::uint64_t> read_ip(pid_t tid) const;
  void refresh_mappings();

  pid_t pid_;
  bool spawned_;
  bool detached_ = false;
  std::optional<int> avoid_core_;
  std::chrono::steady_clock::time_point origin_;
  std::map<pid_t, ThreadState> threads_;
  std::optional<std::int64_t> exit_ns_;
  TargetOutcome outcome_ = TargetOutcome::running;
  int exit_code_ = 0;
  std::uint64_t seq_ = 0;
  std::vector<ModuleMapping> mappings_;
};

}  // namespace alea
