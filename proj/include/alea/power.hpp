#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace alea {

/// A measured power plane. The well-known RAPL planes and the ODROID-style
/// meter rails have fixed names; anything else is carried as a custom name.
class PowerDomain {
 public:
  enum class Kind { pkg, pp0, pp1, dram, big_cluster, little_cluster, gpu, custom };

  PowerDomain() = default;
  explicit PowerDomain(Kind kind);
  /// Maps "PKG", "PP0", ... onto their kind; any other non-empty name is custom.
  static PowerDomain parse(std::string_view name);

  Kind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }

  friend bool operator==(const PowerDomain& a, const PowerDomain& b) { return a.name_ == b.name_; }
  friend auto operator<=>(const PowerDomain& a, const PowerDomain& b) { return a.name_ <=> b.name_; }

 private:
  Kind kind_ = Kind::pkg;
  std::string name_ = "PKG";
};

enum class ReadingStatus {
  ok,
  suspect,  // exceeded the plausibility cap; kept in traces, excluded from estimation
  stale,    // sensor did not advance after one retry
};

struct PowerReading {
  PowerDomain domain;
  double watts = 0.0;
  ReadingStatus status = ReadingStatus::ok;

  bool usable() const noexcept { return status == ReadingStatus::ok; }
  friend bool operator==(const PowerReading&, const PowerReading&) = default;
};

/// Readings taken back-to-back at one sample instant, in the source's fixed domain order.
struct PowerSample {
  std::int64_t timestamp_ns = 0;
  std::vector<PowerReading> readings;

  const PowerReading* find(const PowerDomain& domain) const;
  friend bool operator==(const PowerSample&, const PowerSample&) = default;
};

struct EnergyCounterState {
  std::uint64_t last_raw_uj = 0;
  std::uint64_t wrap_range_uj = 0;
  std::int64_t last_time_ns = 0;
};

struct CounterPower {
  double watts = 0.0;
  std::uint64_t delta_uj = 0;
  bool suspect = false;
  EnergyCounterState state;
};

/// Counter delta (wrap-corrected) divided by the elapsed interval.
/// Throws invalid_input when t_now_ns does not advance or raw_now_uj is out of range.
CounterPower power_from_energy_delta(const EnergyCounterState& prev, std::uint64_t raw_now_uj,
                                     std::int64_t t_now_ns,
                                     double cap_watts = std::numeric_limits<double>::infinity());

class PowerSource {
 public:
  virtual ~PowerSource() = default;

  virtual const std::vector<PowerDomain>& domains() const = 0;

  /// Called once at profile start so delta-based sources can seed their state.
  virtual void start(std::int64_t /*now_ns*/) {}

  /// One sample stamped with `now_ns` (profile-relative). nullopt marks end of stream
  /// for finite sources such as replays.
  virtual std::optional<PowerSample> read(std::int64_t now_ns) = 0;

  /// Readings marked suspect or stale so far.
  std::uint64_t flagged_count() const noexcept { return flagged_; }

 protected:
  void note_flags(const PowerSample& sample);

 private:
  std::uint64_t flagged_ = 0;
};

/// Constant readings; useful for tests and for time-only dry runs.
class MockPowerSource final : public PowerSource {
 public:
  explicit MockPowerSource(std::vector<PowerReading> readings);
  const std::vector<PowerDomain>& domains() const override { return domains_; }
  std::optional<PowerSample> read(std::int64_t now_ns) override;

 private:
  std::vector<PowerReading> readings_;
  std::vector<PowerDomain> domains_;
};

/// Emits samples with no readings (time-only profiling).
class NullPowerSource final : public PowerSource {
 public:
  const std::vector<PowerDomain>& domains() const override { return domains_; }
  std::optional<PowerSample> read(std::int64_t now_ns) override;

 private:
  std::vector<PowerDomain> domains_;
};

struct CounterChannel {
  PowerDomain domain;
  std::string origin;  // path or description, used in error messages
  std::function<std::uint64_t()> read_raw_uj;
  std::uint64_t wrap_range_uj = 0;
};

/// Cumulative energy counters (RAPL/powercap style). The first read only seeds
/// the counter state and carries no readings.
class EnergyCounterSource final : public PowerSource {
 public:
  EnergyCounterSource(std::vector<CounterChannel> channels,
                      double cap_watts = std::numeric_limits<double>::infinity());

  const std::vector<PowerDomain>& domains() const override { return domains_; }
  void start(std::int64_t now_ns) override;
  std::optional<PowerSample> read(std::int64_t now_ns) override;

 private:
  std::uint64_t read_channel(const CounterChannel& channel) const;

  std::vector<CounterChannel> channels_;
  std::vector<PowerDomain> domains_;
  std::vector<EnergyCounterState> states_;
  bool seeded_ = false;
  double cap_watts_;
};

struct MeterChannel {
  PowerDomain domain;
  std::filesystem::path path;
  double scale = 1.0;  // multiplier from the device unit to watts
};

/// Direct meters (INA231 style) that expose period-averaged power as text.
/// The latest averaged value is taken at each sample.
class MeterSource final : public PowerSource {
 public:
  explicit MeterSource(std::vector<MeterChannel> channels,
                       double cap_watts = std::numeric_limits<double>::infinity());

  const std::vector<PowerDomain>& domains() const override { return domains_; }
  std::optional<PowerSample> read(std::int64_t now_ns) override;

 private:
  std::vector<MeterChannel> channels_;
  std::vector<PowerDomain> domains_;
  double cap_watts_;
};

/// Plays back a recorded power trace in file order, ignoring the caller's clock.
class ReplayPowerSource final : public PowerSource {
 public:
  explicit ReplayPowerSource(std::vector<PowerSample> samples);

  const std::vector<PowerDomain>& domains() const override { return domains_; }
  std::optional<PowerSample> read(std::int64_t now_ns) override;

 private:
  std::vector<PowerSample> samples_;
  std::vector<PowerDomain> domains_;
  std::size_t next_ = 0;
};

/// Opens a source from a descriptor:
///   none
///   mock:PKG=9.5[,DRAM=2.0]
///   replay:PATH
///   powercap:PKG=DIR[,DRAM=DIR][;cap=WATTS][;wrap=UJ]
///   meter:NAME=PATH[*SCALE][,NAME=PATH...][;cap=WATTS]
/// A powercap DIR holds `energy_uj` and `max_energy_range_uj`.
std::unique_ptr<PowerSource> open_source(std::string_view descriptor);

// Power trace CSV: header `timestamp_ns,domain,watts`, one reading per row.
// A flagged reading carries a one-character suffix on the watts field:
// '!' suspect, '?' stale.
void write_power_trace(std::ostream& out, const std::vector<PowerSample>& samples);
std::vector<PowerSample> read_power_trace(std::istream& in);
std::vector<PowerSample> read_power_trace(const std::filesystem::path& path);

// Shared by the power CSV and the sample-trace format.
std::string format_watts(const PowerReading& reading);
PowerReading parse_reading(std::string_view domain, std::string_view watts_field);

}  // namespace alea
