#include "alea/ptrace_target.hpp"

#include <elf.h>
#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/ptrace.h>
#include <sys/uio.h>
#include <sys/user.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <thread>

#include "alea/binary.hpp"
#include "alea/error.hpp"

namespace alea {

namespace {

sigset_t control_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGCHLD);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  return set;
}

std::string errno_text(int err) { return std::strerror(err); }

bool is_group_stop_signal(int sig) { return sig == SIGSTOP || sig == SIGTSTP || sig == SIGTTIN || sig == SIGTTOU; }

void restrict_affinity(pid_t tid, int avoid_core) {
  cpu_set_t set;
  CPU_ZERO(&set);
  if (sched_getaffinity(tid, sizeof(set), &set) != 0) return;
  if (!CPU_ISSET(avoid_core, &set) || CPU_COUNT(&set) < 2) return;
  CPU_CLR(avoid_core, &set);
  sched_setaffinity(tid, sizeof(set), &set);
}

}  // namespace

void PtraceTarget::block_control_signals() {
  const sigset_t set = control_signals();
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

PtraceTarget::PtraceTarget(pid_t pid, bool spawned, std::optional<int> avoid_core)
    : pid_(pid), spawned_(spawned), avoid_core_(avoid_core), origin_(std::chrono::steady_clock::now()) {}

std::unique_ptr<PtraceTarget> PtraceTarget::spawn(const std::vector<std::string>& argv, std::optional<int> avoid_core) {
  if (argv.empty()) throw Error(ErrorKind::attach, "no command to spawn");
  block_control_signals();

  int fds[2];
  if (pipe2(fds, O_CLOEXEC) != 0) throw Error(ErrorKind::attach, "pipe: " + errno_text(errno));

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const auto origin = std::chrono::steady_clock::now();
  const pid_t child = fork();
  if (child < 0) {
    close(fds[0]);
    close(fds[1]);
    throw Error(ErrorKind::attach, "fork: " + errno_text(errno));
  }
  if (child == 0) {
    close(fds[0]);
    sigset_t none;
    sigemptyset(&none);
    sigprocmask(SIG_SETMASK, &none, nullptr);
    if (avoid_core) restrict_affinity(0, *avoid_core);
    raise(SIGSTOP);  // held until the parent has seized us
    execvp(args[0], args.data());
    const int err = errno;
    [[maybe_unused]] auto ignored = write(fds[1], &err, sizeof err);
    _exit(127);
  }
  close(fds[1]);

  std::unique_ptr<PtraceTarget> target(new PtraceTarget(child, true, avoid_core));
  target->origin_ = origin;
  int status = 0;
  pid_t got_stop;
  do {
    got_stop = waitpid(child, &status, WUNTRACED);
  } while (got_stop < 0 && errno == EINTR);
  if (got_stop != child || !WIFSTOPPED(status)) {
    close(fds[0]);
    target->detached_ = true;
    throw Error(ErrorKind::attach, "spawned child did not stop before exec");
  }
  if (ptrace(PTRACE_SEIZE, child, nullptr, reinterpret_cast<void*>(PTRACE_O_EXITKILL)) != 0 ||
      ::kill(child, SIGCONT) != 0) {
    const int err = errno;
    close(fds[0]);
    ::kill(child, SIGKILL);
    waitpid(child, nullptr, 0);
    target->detached_ = true;
    throw Error(ErrorKind::attach, "ptrace seize of spawned child failed: " + errno_text(err));
  }
  target->threads_[child] = {};

  // The stops that follow SIGCONT need acknowledging before exec can proceed.
  pollfd pfd{fds[0], POLLIN, 0};
  while (true) {
    const int ready = poll(&pfd, 1, 1);
    if (ready > 0 || (ready < 0 && errno != EINTR)) break;
    target->drain_events();
  }
  int exec_errno = 0;
  ssize_t got;
  do {
    got = read(fds[0], &exec_errno, sizeof exec_errno);
  } while (got < 0 && errno == EINTR);
  close(fds[0]);
  if (got == sizeof exec_errno) {
    waitpid(child, nullptr, __WALL);
    target->detached_ = true;
    throw Error(ErrorKind::attach, "cannot execute " + argv[0] + ": " + errno_text(exec_errno));
  }
  target->refresh_mappings();
  return target;
}

std::unique_ptr<PtraceTarget> PtraceTarget::attach(pid_t pid, std::optional<int> avoid_core) {
  if (pid <= 0) throw Error(ErrorKind::attach, "invalid pid " + std::to_string(pid));
  if (::kill(pid, 0) != 0 && errno == ESRCH) throw Error(ErrorKind::attach, "no such process " + std::to_string(pid));
  block_control_signals();
  std::unique_ptr<PtraceTarget> target(new PtraceTarget(pid, false, avoid_core));
  if (ptrace(PTRACE_SEIZE, pid, nullptr, nullptr) != 0) {
    const int err = errno;
    target->detached_ = true;
    throw Error(ErrorKind::attach, "cannot attach to " + std::to_string(pid) + ": " + errno_text(err) +
                                       (err == EPERM ? " (check ptrace permissions)" : ""));
  }
  target->threads_[pid] = {};
  if (avoid_core) restrict_affinity(pid, *avoid_core);
  target->refresh_threads();
  target->refresh_mappings();
  return target;
}

PtraceTarget::~PtraceTarget() {
  try {
    detach();
  } catch (...) {
  }
}

std::vector<pid_t> PtraceTarget::threads() const {
  std::vector<pid_t> out;
  for (const auto& [tid, st] : threads_) out.push_back(tid);
  return out;
}

std::int64_t PtraceTarget::now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - origin_).count();
}

TargetOutcome PtraceTarget::outcome() const { return outcome_; }

void PtraceTarget::seize(pid_t tid) {
  if (threads_.contains(tid)) return;
  const long opts = spawned_ ? PTRACE_O_EXITKILL : 0;
  if (ptrace(PTRACE_SEIZE, tid, nullptr, reinterpret_cast<void*>(opts)) != 0) {
    if (errno == ESRCH) return;  // exited before we got to it
    if (errno == EPERM && !threads_.empty()) return;  // already traced (raced with our own seize)
    throw Error(ErrorKind::attach, "cannot seize thread " + std::to_string(tid) + ": " + errno_text(errno));
  }
  threads_[tid] = {};
  if (avoid_core_) restrict_affinity(tid, *avoid_core_);
}

void PtraceTarget::refresh_threads() {
  std::error_code ec;
  std::filesystem::directory_iterator it("/proc/" + std::to_string(pid_) + "/task", ec);
  if (ec) return;  // process is gone; exit is picked up from waitpid
  for (const auto& entry : it) {
    const auto name = entry.path().filename().string();
    char* end = nullptr;
    const long tid = std::strtol(name.c_str(), &end, 10);
    if (end && *end == '\0' && tid > 0) seize(static_cast<pid_t>(tid));
  }
}

void PtraceTarget::thread_gone(pid_t tid, int status) {
  threads_.erase(tid);
  if (tid != pid_) return;
  exit_ns_ = now_ns();
  if (WIFSIGNALED(status)) {
    outcome_ = TargetOutcome::crashed;
    exit_code_ = 128 + WTERMSIG(status);
  } else {
    outcome_ = TargetOutcome::exited;
    exit_code_ = WEXITSTATUS(status);
  }
  threads_.clear();
  detached_ = true;
}

bool PtraceTarget::handle_status(pid_t tid, int status, bool sampling) {
  if (WIFEXITED(status) || WIFSIGNALED(status)) {
    thread_gone(tid, status);
    return false;
  }
  if (!WIFSTOPPED(status)) return false;
  auto it = threads_.find(tid);
  if (it == threads_.end()) {
    // A thread created since the last enumeration that inherited our trace.
    ptrace(PTRACE_CONT, tid, nullptr, nullptr);
    return false;
  }
  const int event = status >> 16;
  const int sig = WSTOPSIG(status);
  if (event == PTRACE_EVENT_STOP) {
    if (is_group_stop_signal(sig)) {
      ptrace(PTRACE_LISTEN, tid, nullptr, nullptr);
      return false;
    }
    if (sampling) {
      it->second.stopped = true;
      return true;
    }
    ptrace(PTRACE_CONT, tid, nullptr, nullptr);
    return false;
  }
  // Signal-delivery stop: hold the signal for re-injection on resume.
  const int inject = event == 0 ? sig : 0;
  if (sampling) {
    it->second.stopped = true;
    it->second.pending_signal = inject;
    return true;
  }
  ptrace(PTRACE_CONT, tid, nullptr, reinterpret_cast<void*>(static_cast<long>(inject)));
  return false;
}

void PtraceTarget::drain_events() {
  if (detached_) return;
  while (true) {
    int status = 0;
    const pid_t tid = waitpid(-1, &status, WNOHANG | __WALL);
    if (tid <= 0) return;
    handle_status(tid, status, false);
    if (exit_ns_) return;
  }
}

WaitResult PtraceTarget::wait_until(std::int64_t deadline_ns) {
  const sigset_t set = control_signals();
  while (true) {
    drain_events();
    if (exit_ns_) return WaitResult::exited;
    const std::int64_t remaining = deadline_ns - now_ns();
    if (remaining <= 0) return WaitResult::deadline;
    timespec ts{static_cast<time_t>(remaining / 1'000'000'000), static_cast<long>(remaining % 1'000'000'000)};
    const int sig = sigtimedwait(&set, nullptr, &ts);
    if (sig == SIGINT || sig == SIGTERM) return WaitResult::interrupted;
  }
}

std::optional<std::uint64_t> PtraceTarget::read_ip(pid_t tid) const {
  user_regs_struct regs{};
  iovec io{&regs, sizeof regs};
  if (ptrace(PTRACE_GETREGSET, tid, reinterpret_cast<void*>(NT_PRSTATUS), &io) != 0) return std::nullopt;
#if defined(__x86_64__)
  return regs.rip;
#elif defined(__aarch64__)
  return regs.pc;
#else
#error "instruction pointer extraction not ported to this architecture"
#endif
}

std::optional<RawSample> PtraceTarget::sample_once(PowerSource& power) {
  drain_events();
  if (exit_ns_) return std::nullopt;
  refresh_threads();

  const auto stop_begin = now_ns();
  std::vector<pid_t> interrupted;
  for (auto& [tid, st] : threads_) {
    st = {};
    if (ptrace(PTRACE_INTERRUPT, tid, nullptr, nullptr) == 0) interrupted.push_back(tid);
  }
  for (pid_t tid : interrupted) {
    while (threads_.contains(tid) && !threads_[tid].stopped) {
      int status = 0;
      const pid_t got = waitpid(tid, &status, __WALL);
      if (got < 0) {
        if (errno == EINTR) continue;
        threads_.erase(tid);  // vanished; its slot reads as ABSENT
        break;
      }
      handle_status(got, status, true);
      if (exit_ns_) return std::nullopt;
    }
  }

  RawSample s;
  s.seq = seq_++;
  s.wall_time_ns = stop_begin;
  for (const auto& [tid, st] : threads_) {
    if (!st.stopped) continue;
    if (auto ip = read_ip(tid)) s.threads.push_back({tid, *ip});
  }
  // Power after every pointer, so the counter interval matches the sample interval.
  auto p = power.read(stop_begin);
  if (p) s.power = std::move(*p);

  for (auto& [tid, st] : threads_) {
    if (!st.stopped) continue;
    ptrace(PTRACE_CONT, tid, nullptr, reinterpret_cast<void*>(static_cast<long>(st.pending_signal)));
    st = {};
  }
  s.stop_ns = now_ns() - stop_begin;
  if ((seq_ & (seq_ - 1)) == 0) refresh_mappings();
  return s;
}

void PtraceTarget::refresh_mappings() {
  try {
    for (auto& m : read_process_mappings(pid_))
      if (std::find(mappings_.begin(), mappings_.end(), m) == mappings_.end()) mappings_.push_back(std::move(m));
  } catch (const Error&) {
  }
}

void PtraceTarget::detach() {
  if (detached_) return;
  detached_ = true;
  for (auto& [tid, st] : threads_) {
    if (ptrace(PTRACE_INTERRUPT, tid, nullptr, nullptr) != 0) continue;
    int inject = 0;
    while (true) {
      int status = 0;
      const pid_t got = waitpid(tid, &status, __WALL);
      if (got < 0 && errno == EINTR) continue;
      if (got < 0 || WIFEXITED(status) || WIFSIGNALED(status)) {
        if (got == pid_) {
          exit_ns_ = now_ns();
          outcome_ = WIFSIGNALED(status) ? TargetOutcome::crashed : TargetOutcome::exited;
        }
        break;
      }
      if (!WIFSTOPPED(status)) continue;
      if ((status >> 16) == 0) inject = WSTOPSIG(status);
      ptrace(PTRACE_DETACH, tid, nullptr, reinterpret_cast<void*>(static_cast<long>(inject)));
      break;
    }
  }
  threads_.clear();
}

void PtraceTarget::kill_and_reap() {
  if (!spawned_ || exit_ns_) return;
  ::kill(pid_, SIGKILL);
  while (true) {
    int status = 0;
    const pid_t got = waitpid(-1, &status, __WALL);
    if (got < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (got == pid_ && (WIFEXITED(status) || WIFSIGNALED(status))) {
      thread_gone(pid_, status);
      break;
    }
  }
  detached_ = true;
  threads_.clear();
}

}  // namespace alea
