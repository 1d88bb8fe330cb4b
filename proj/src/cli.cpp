#include "alea/cli.hpp"

#include <signal.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "alea/binary.hpp"
#include "alea/error.hpp"
#include "alea/ptrace_target.hpp"
#include "alea/sampler.hpp"
#include "alea/sim.hpp"

namespace alea::cli {

namespace {

namespace fs = std::filesystem;

struct Failure {
  ExitCode code;
  std::string message;
};

[[noreturn]] void fail(ExitCode code, std::string message) { throw Failure{code, std::move(message)}; }

Granularity parse_granularity(const std::string& name) {
  if (name == "block") return Granularity::block;
  if (name == "combination") return Granularity::combination;
  fail(usage, "unknown granularity '" + name + "'");
}

ReportSettings settings_of(const RunConfig& c) {
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) fail(usage, "alpha must lie in (0, 1)");
  ReportSettings s;
  s.alpha = c.alpha;
  s.granularity = parse_granularity(c.granularity);
  if (c.domain) {
    try {
      s.domain = PowerDomain::parse(*c.domain);
    } catch (const Error& e) {
      fail(usage, e.what());
    }
  }
  return s;
}

ReportFormat format_of(const RunConfig& c) {
  try {
    if (c.format) return parse_report_format(*c.format);
  } catch (const Error& e) {
    fail(usage, e.what());
  }
  if (c.output) {
    const auto ext = fs::path(*c.output).extension().string();
    if (ext == ".csv") return ReportFormat::csv;
    if (ext == ".txt") return ReportFormat::text;
    return ReportFormat::json;
  }
  return ReportFormat::text;
}

std::vector<BlockMap> load_maps(const std::vector<std::string>& paths) {
  std::vector<BlockMap> maps;
  for (const auto& p : paths) {
    try {
      for (auto& m : load_blockmaps(p)) maps.push_back(std::move(m));
    } catch (const Error& e) {
      fail(blockmap_failed, e.what());
    }
  }
  return maps;
}

// Function-level map of the main binary when no block map is given.
std::vector<BlockMap> fallback_maps(const std::string& executable, std::ostream& err) {
  if (executable.empty()) return {};
  std::error_code ec;
  if (!fs::exists(executable, ec)) return {};
  try {
    auto symbols = read_function_symbols(executable);
    if (symbols.empty()) return {};
    std::vector<BlockMap> maps;
    maps.push_back(symbol_fallback(executable, std::move(symbols)));
    return maps;
  } catch (const Error& e) {
    err << "alea: no symbols from " << executable << ": " << e.what() << '\n';
    return {};
  }
}

void write_output(const RunConfig& c, const std::string& text, std::ostream& out) {
  if (!c.output || *c.output == "-") {
    out << text;
    out.flush();
    if (!out) fail(output_failed, "cannot write report to standard output");
    return;
  }
  std::ofstream f(*c.output, std::ios::binary);
  f << text;
  f.close();
  if (!f) fail(output_failed, "cannot write report to " + *c.output);
}

class StreamSink final : public SampleSink {
 public:
  explicit StreamSink(std::ostream& out) : out_(out) {}
  void write(const RawSample& sample) override {
    out_ << format_sample_line(sample) << '\n';
    if (!out_) throw Error(ErrorKind::io, "trace write failed");
  }
  void close() override {
    out_.flush();
    if (!out_) throw Error(ErrorKind::io, "trace write failed");
  }

 private:
  std::ostream& out_;
};

// Keeps every sample in memory and streams a copy to the recording.
class RecordingSink final : public SampleSink {
 public:
  explicit RecordingSink(SampleSink* file) : file_(file) {}
  void write(const RawSample& sample) override {
    samples.push_back(sample);
    if (file_ && !file_failed) {
      try {
        file_->write(sample);
      } catch (...) {
        file_failed = true;
      }
    }
  }
  void close() override {
    if (file_ && !file_failed) {
      try {
        file_->close();
      } catch (...) {
        file_failed = true;
      }
    }
  }

  std::vector<RawSample> samples;
  bool file_failed = false;

 private:
  SampleSink* file_;
};

std::string executable_of(pid_t pid) {
  std::error_code ec;
  auto p = fs::read_symlink("/proc/" + std::to_string(pid) + "/exe", ec);
  return ec ? std::string() : p.string();
}

int cmd_profile(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.command.empty() == !c.pid) fail(usage, "give either --pid or a command to run");
  const auto settings = settings_of(c);
  const auto format = format_of(c);

  SamplerConfig sc;
  if (!(c.period_ms > 0.0)) fail(usage, "period must be positive");
  sc.period_ns = static_cast<std::int64_t>(std::llround(c.period_ms * 1e6));
  sc.jitter = c.jitter;
  sc.jitter_enabled = !c.no_jitter;
  sc.seed = c.seed ? *c.seed : std::random_device{}();
  if (c.max_duration_s) sc.max_duration_ns = static_cast<std::int64_t>(std::llround(*c.max_duration_s * 1e9));
  try {
    sc.validate();
  } catch (const Error& e) {
    fail(usage, e.what());
  }

  auto maps = load_maps(c.blockmaps);

  std::unique_ptr<PowerSource> power;
  try {
    power = open_source(c.power_source);
  } catch (const Error& e) {
    fail(sensor_failed, e.what());
  }

  std::optional<int> avoid;
  if (c.pin_core) {
    if (pin_current_thread(*c.pin_core)) {
      if (sysconf(_SC_NPROCESSORS_ONLN) > 1) avoid = c.pin_core;
      else err << "alea: single CPU, the target shares the control core\n";
    } else {
      err << "alea: cannot pin to core " << *c.pin_core << ", running unpinned\n";
    }
  }

  std::ofstream record;
  if (c.record) {
    record.open(*c.record, std::ios::binary);
    if (!record) fail(output_failed, "cannot open " + *c.record + " for recording");
  }

  sigset_t old_mask;
  pthread_sigmask(SIG_BLOCK, nullptr, &old_mask);
  struct RestoreMask {
    sigset_t mask;
    ~RestoreMask() { pthread_sigmask(SIG_SETMASK, &mask, nullptr); }
  } restore{old_mask};

  std::unique_ptr<PtraceTarget> target;
  try {
    target = c.pid ? PtraceTarget::attach(*c.pid, avoid) : PtraceTarget::spawn(c.command, avoid);
  } catch (const Error& e) {
    fail(attach_failed, e.what());
  }

  TraceMeta meta;
  meta.period_ns = sc.period_ns;
  meta.jitter = sc.jitter_enabled ? sc.jitter : 0.0;
  meta.power_source = c.power_source;
  meta.executable = executable_of(target->pid());
  if (record) write_trace_header(record, meta);

  SamplerReport run;
  bool record_failed = false;
  {
    StreamSink file(record);
    std::optional<QueuedSink> queued;
    if (record) queued.emplace(file);
    RecordingSink sink(queued ? &*queued : nullptr);
    try {
      run = run_systematic(*target, sc, *power, sink);
    } catch (const Error& e) {
      target->kill_and_reap();
      target->detach();
      fail(e.kind() == ErrorKind::source ? sensor_failed : internal, e.what());
    }
    record_failed = sink.file_failed;
    if (target->outcome() == TargetOutcome::running) {
      if (target->spawned()) target->kill_and_reap();
      else target->detach();
    }
    meta.mappings = target->mappings();
    run.fill(meta);
    if (record_failed) meta.partial = true;
    Trace trace{meta, std::move(sink.samples)};
    if (record && !record_failed) {
      write_trace_footer(record, meta);
      record.close();
      if (!record) record_failed = true;
    }
    if (trace.samples.empty()) {
      err << "alea: target ended before the first sample\n";
      return run.outcome == TargetOutcome::crashed ? target_crashed : ok;
    }

    if (maps.empty()) maps = fallback_maps(meta.executable, err);
    Report report;
    try {
      report = report_from_trace(trace, std::move(maps), settings);
    } catch (const Error& e) {
      fail(internal, e.what());
    }
    write_output(c, render(report, format, c.min_samples), out);
  }
  if (record_failed) fail(output_failed, "recording to " + *c.record + " failed; the report covers every sample");
  if (run.outcome == TargetOutcome::crashed) {
    err << "alea: target crashed (status " << run.exit_code << "); report written from the samples taken\n";
    return target_crashed;
  }
  return ok;
}

int cmd_replay(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto settings = settings_of(c);
  const auto format = format_of(c);
  auto maps = load_maps(c.blockmaps);
  Trace trace;
  try {
    trace = read_trace(fs::path(c.input));
  } catch (const Error& e) {
    fail(malformed_input, e.what());
  }
  if (maps.empty()) maps = fallback_maps(trace.meta.executable, err);
  Report report;
  try {
    report = report_from_trace(trace, std::move(maps), settings);
  } catch (const Error& e) {
    fail(e.kind() == ErrorKind::invalid_input ? usage : malformed_input, e.what());
  }
  write_output(c, render(report, format, c.min_samples), out);
  return report.meta.outcome == TargetOutcome::crashed ? target_crashed : ok;
}

int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream&) {
  sim::Scenario scenario;
  try {
    scenario = sim::load_scenario(c.input);
  } catch (const Error& e) {
    fail(malformed_input, e.what());
  }
  if (c.seed) scenario.seed = *c.seed;
  const auto reps = c.replications > 0 ? c.replications : scenario.replications;
  try {
    if (c.export_trace || c.export_blockmap) {
      const auto rep = sim::run_replication(scenario, 0);
      if (c.export_trace) {
        std::ofstream f(*c.export_trace, std::ios::binary);
        write_trace(f, sim::to_trace(rep.samples, rep.truth.t_exec_s, scenario.sampling, scenario.tick_hz));
        f.close();
        if (!f) fail(output_failed, "cannot write " + *c.export_trace);
      }
      if (c.export_blockmap) {
        std::ofstream f(*c.export_blockmap, std::ios::binary);
        serialize_blockmap(f, {sim::synthetic_blockmap(scenario.program)});
        f.close();
        if (!f) fail(output_failed, "cannot write " + *c.export_blockmap);
      }
    }
    write_output(c, sim::summary_to_json(sim::simulate(scenario, reps)), out);
  } catch (const Error& e) {
    fail(malformed_input, e.what());
  }
  return ok;
}

int cmd_symbols(const RunConfig& c, std::ostream& out) {
  std::vector<BlockMap> maps;
  try {
    maps.push_back(symbol_fallback(fs::absolute(c.input).lexically_normal().string(), read_function_symbols(c.input)));
  } catch (const Error& e) {
    fail(blockmap_failed, e.what());
  }
  std::ostringstream text;
  if (c.format && *c.format == "json") text << blockmap_to_json(maps);
  else serialize_blockmap(text, maps);
  write_output(c, text.str(), out);
  return ok;
}

void add_report_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--blockmap", c.blockmaps, "Block map file (text or JSON); repeatable")->envname("ALEA_BLOCKMAP");
  sub->add_option("--alpha", c.alpha, "Significance level of the confidence intervals")->envname("ALEA_ALPHA");
  sub->add_option("--granularity", c.granularity, "block or combination")->envname("ALEA_GRANULARITY");
  sub->add_option("--domain", c.domain, "Power domain behind per-block power (default: first in the stream)")
      ->envname("ALEA_DOMAIN");
  sub->add_option("-o,--output", c.output, "Report path (default: standard output)")->envname("ALEA_OUTPUT");
  sub->add_option("--format", c.format, "json, csv or text")->envname("ALEA_FORMAT");
  sub->add_option("--min-samples", c.min_samples, "Hide rows with fewer samples from text output")
      ->envname("ALEA_MIN_SAMPLES");
}

}  // namespace

Report report_from_trace(const Trace& trace, std::vector<BlockMap> maps, const ReportSettings& settings) {
  Symbolizer symbols(std::move(maps), trace.meta.mappings);
  const auto records = to_records(trace.samples, symbols);
  const auto t = exec_time(trace);
  ProfileOptions options;
  options.confidence = ConfidenceSpec(settings.alpha);
  options.granularity = settings.granularity;
  options.domain = settings.domain;
  options.known_blocks = symbols.known_blocks();
  const auto profile = build_profile(records, t.seconds, options);
  return make_report(profile, symbols, trace.meta, t.measured, settings);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"alea: sampling-based time and energy profiler for basic blocks"};
  app.require_subcommand(1);

  auto* profile = app.add_subcommand("profile", "Profile a command or a running process");
  profile->add_option("--pid", c.pid, "Attach to this process instead of spawning");
  profile->add_option("--power-source", c.power_source, "none, mock:..., powercap:..., meter:... or replay:PATH")
      ->envname("ALEA_POWER_SOURCE");
  profile->add_option("--period-ms", c.period_ms, "Sampling period in milliseconds")->envname("ALEA_PERIOD_MS");
  profile->add_option("--jitter", c.jitter, "Jitter bound as a fraction of the period, below 0.5")
      ->envname("ALEA_JITTER");
  profile->add_flag("--no-jitter", c.no_jitter, "Sample on the exact period");
  profile->add_option("--record", c.record, "Write the raw trace here")->envname("ALEA_RECORD");
  profile->add_option("--pin-core", c.pin_core, "Pin the control loop to this core")->envname("ALEA_PIN_CORE");
  profile->add_option("--max-duration", c.max_duration_s, "Stop sampling after this many seconds")
      ->envname("ALEA_MAX_DURATION");
  profile->add_option("--seed", c.seed, "Seed for the offset and jitter draws")->envname("ALEA_SEED");
  profile->add_option("command", c.command, "Command to spawn; put it after -- when it takes options");
  add_report_options(profile, c);

  auto* replay = app.add_subcommand("replay", "Build a report from a recorded trace");
  replay->add_option("trace", c.input, "Trace file")->required();
  add_report_options(replay, c);

  auto* simulate = app.add_subcommand("simulate", "Run a synthetic scenario against its exact ground truth");
  simulate->add_option("scenario", c.input, "Scenario JSON")->required();
  simulate->add_option("--replications", c.replications, "Overrides the scenario's count");
  simulate->add_option("--seed", c.seed, "Overrides the scenario's seed")->envname("ALEA_SEED");
  simulate->add_option("-o,--output", c.output, "Summary path (default: standard output)");
  simulate->add_option("--export-trace", c.export_trace, "Write replication 0 as a trace");
  simulate->add_option("--export-blockmap", c.export_blockmap, "Write the scenario's block map");

  auto* symbols = app.add_subcommand("symbols", "Write a function-level block map from ELF symbols");
  symbols->add_option("binary", c.input, "ELF file")->required();
  symbols->add_option("-o,--output", c.output, "Map path (default: standard output)");
  symbols->add_option("--format", c.format, "text or json");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  try {
    if (profile->parsed()) return cmd_profile(c, out, err);
    if (replay->parsed()) return cmd_replay(c, out, err);
    if (simulate->parsed()) return cmd_simulate(c, out, err);
    if (symbols->parsed()) return cmd_symbols(c, out);
  } catch (const Failure& f) {
    err << "alea: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    err << "alea: internal error: " << e.what() << '\n';
    return internal;
  }
  return usage;
}

}  // namespace alea::cli
