#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alea/power.hpp"

namespace alea {

/// Identity of one basic block (or function, at symbol granularity).
/// UNKNOWN marks an address no map could resolve; it may still name the module
/// the address fell into. ABSENT fills the slot of a thread that did not exist
/// at the sample instant.
struct BlockKey {
  static constexpr std::uint32_t kNoModule = 0xFFFFFFFFu;
  static constexpr std::uint32_t kUnknownBlock = 0xFFFFFFFFu;
  static constexpr std::uint32_t kAbsentBlock = 0xFFFFFFFEu;

  std::uint32_t module = kNoModule;
  std::uint32_t block = kUnknownBlock;

  static constexpr BlockKey unknown(std::uint32_t module = kNoModule) { return {module, kUnknownBlock}; }
  static constexpr BlockKey absent() { return {kNoModule, kAbsentBlock}; }

  constexpr bool is_unknown() const { return block == kUnknownBlock; }
  constexpr bool is_absent() const { return module == kNoModule && block == kAbsentBlock; }

  friend constexpr auto operator<=>(const BlockKey&, const BlockKey&) = default;
};

/// One block per thread slot; slots are ordered by first appearance of the thread.
struct CombinationKey {
  std::vector<BlockKey> blocks;

  CombinationKey() = default;
  explicit CombinationKey(std::vector<BlockKey> b) : blocks(std::move(b)) {}
  static CombinationKey single(BlockKey key) { return CombinationKey({key}); }

  std::size_t size() const { return blocks.size(); }
  friend auto operator<=>(const CombinationKey&, const CombinationKey&) = default;
};

struct SampleRecord {
  std::uint64_t seq = 0;
  std::int64_t wall_time_ns = 0;
  CombinationKey key;
  PowerSample power;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double x) const { return lower <= x && x <= upper; }
  double half_width() const { return 0.5 * (upper - lower); }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Significance level and its two-sided standard normal quantile.
class ConfidenceSpec {
 public:
  explicit ConfidenceSpec(double alpha = 0.05);

  double alpha() const noexcept { return alpha_; }
  double z() const noexcept { return z_; }

 private:
  double alpha_;
  double z_;
};

/// The 1 - alpha/2 quantile of the standard normal distribution.
double normal_quantile(double alpha);

double estimate_proportion(std::uint64_t n_k, std::uint64_t n);
double estimate_time(double p_hat, double t_exec_s);
double estimate_mean_power(std::span<const double> watts);
double estimate_energy(double pow_hat, double t_hat);

struct ProportionInterval {
  Interval bounds;
  bool valid = false;  // n*p > 5 and n*(1-p) > 5
};

/// Wald interval clamped to [0, 1]. Reported even when the normal
/// approximation is not justified; `valid` says whether it is.
ProportionInterval proportion_ci(double p_hat, std::uint64_t n, const ConfidenceSpec& spec);

struct PowerInterval {
  Interval bounds;
  double mean = 0.0;
  double s = 0.0;  // corrected sample standard deviation
  bool computable = false;
};

/// mean +- z*s/sqrt(n). With fewer than two samples the interval degenerates to
/// the point estimate and is marked not computable. The lower bound is clamped at 0.
PowerInterval power_ci(std::span<const double> watts, const ConfidenceSpec& spec);

Interval energy_ci(const Interval& p_ci, double t_exec_s, const Interval& pow_ci);

enum class Granularity { block, combination };

struct BlockEstimate {
  CombinationKey key;
  std::uint64_t n_k = 0;
  std::uint64_t power_n = 0;  // usable power readings behind pow_hat
  double p_hat = 0.0;
  double t_hat = 0.0;
  double pow_hat = 0.0;
  double pow_s = 0.0;
  double e_hat = 0.0;
  Interval p_ci;
  Interval t_ci;
  Interval pow_ci;
  Interval e_ci;
  bool ci_valid = false;
  bool pow_ci_computable = false;
};

struct DomainTotal {
  PowerDomain domain;
  double estimated_energy_j = 0.0;   // sum over keys of mean power * t_hat
  double integrated_energy_j = 0.0;  // sum over samples of watts * interval
  std::uint64_t usable_readings = 0;
};

struct Profile {
  double t_exec_s = 0.0;
  std::uint64_t n = 0;
  std::size_t thread_slots = 0;
  Granularity granularity = Granularity::combination;
  std::optional<PowerDomain> domain;  // domain behind pow_hat / e_hat
  std::vector<BlockEstimate> estimates;  // ordered by key
  std::vector<BlockKey> unsampled;       // known blocks with n_k = 0
  std::vector<DomainTotal> domain_totals;
  std::uint64_t flagged_readings = 0;

  const BlockEstimate* find(const CombinationKey& key) const;
};

struct ProfileOptions {
  ConfidenceSpec confidence{};
  Granularity granularity = Granularity::combination;
  /// Domain for per-block power; defaults to the first domain in the stream.
  std::optional<PowerDomain> domain;
  /// Blocks from the block map; those never sampled are listed as unsampled
  /// (block granularity only).
  std::vector<BlockKey> known_blocks;
};

/// Aggregates a sample stream into per-key estimates.
///
/// Combination granularity keys on the full per-thread tuple. Block granularity
/// projects every sample onto the distinct blocks of its threads: each such block
/// gets one count and the full power reading (shared-resource attribution, no
/// apportioning). With more than one thread slot the block-granularity
/// proportions therefore need not sum to one.
///
/// Throws invalid_input on an empty stream or negative t_exec and
/// malformed_stream on mixed key lengths.
Profile build_profile(std::span<const SampleRecord> samples, double t_exec_s,
                      const ProfileOptions& options = {});

}  // namespace alea
