#include "alea/model.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <map>
#include <string>

#include "alea/error.hpp"

namespace alea {

double normal_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorKind::invalid_input, "alpha must lie in (0, 1), got " + std::to_string(alpha));
  return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<double>(), 0.5 * alpha));
}

ConfidenceSpec::ConfidenceSpec(double alpha) : alpha_(alpha), z_(normal_quantile(alpha)) {}

double estimate_proportion(std::uint64_t n_k, std::uint64_t n) {
  if (n == 0) throw Error(ErrorKind::invalid_input, "empty sample stream");
  if (n_k > n) throw Error(ErrorKind::invalid_input, "block count exceeds total sample count");
  return static_cast<double>(n_k) / static_cast<double>(n);
}

double estimate_time(double p_hat, double t_exec_s) {
  if (!(p_hat >= 0.0 && p_hat <= 1.0) || !(t_exec_s >= 0.0))
    throw Error(ErrorKind::invalid_input, "estimate_time needs 0 <= p <= 1 and t_exec >= 0");
  return p_hat * t_exec_s;
}

double estimate_mean_power(std::span<const double> watts) {
  if (watts.empty()) throw Error(ErrorKind::invalid_input, "mean power of an empty sample list");
  // Running mean: exact when every reading is the same value.
  double mean = 0.0;
  std::size_t k = 0;
  for (double w : watts) mean += (w - mean) / static_cast<double>(++k);
  return mean;
}

double estimate_energy(double pow_hat, double t_hat) {
  if (!(pow_hat >= 0.0) || !(t_hat >= 0.0))
    throw Error(ErrorKind::invalid_input, "estimate_energy needs non-negative power and time");
  return pow_hat * t_hat;
}

ProportionInterval proportion_ci(double p_hat, std::uint64_t n, const ConfidenceSpec& spec) {
  if (n == 0) throw Error(ErrorKind::invalid_input, "proportion interval needs n >= 1");
  const double nd = static_cast<double>(n);
  const double half = spec.z() * std::sqrt(p_hat * (1.0 - p_hat) / nd);
  ProportionInterval out;
  out.bounds = {std::max(0.0, p_hat - half), std::min(1.0, p_hat + half)};
  out.valid = nd * p_hat > 5.0 && nd * (1.0 - p_hat) > 5.0;
  return out;
}

PowerInterval power_ci(std::span<const double> watts, const ConfidenceSpec& spec) {
  PowerInterval out;
  out.mean = estimate_mean_power(watts);
  if (watts.size() < 2) {
    out.bounds = {out.mean, out.mean};
    return out;
  }
  double ss = 0.0;
  for (double w : watts) ss += (w - out.mean) * (w - out.mean);
  const double n = static_cast<double>(watts.size());
  out.s = std::sqrt(ss / (n - 1.0));
  const double half = spec.z() * out.s / std::sqrt(n);
  out.bounds = {std::max(0.0, out.mean - half), out.mean + half};
  out.computable = true;
  return out;
}

Interval energy_ci(const Interval& p_ci, double t_exec_s, const Interval& pow_ci) {
  if (p_ci.lower > p_ci.upper || pow_ci.lower > pow_ci.upper || p_ci.lower < 0.0 ||
      pow_ci.lower < 0.0 || t_exec_s < 0.0)
    throw Error(ErrorKind::invalid_input, "energy interval needs ordered, non-negative inputs");
  return {p_ci.lower * t_exec_s * pow_ci.lower, p_ci.upper * t_exec_s * pow_ci.upper};
}

const BlockEstimate* Profile::find(const CombinationKey& key) const {
  auto it = std::lower_bound(estimates.begin(), estimates.end(), key,
                             [](const BlockEstimate& e, const CombinationKey& k) { return e.key < k; });
  return it != estimates.end() && it->key == key ? &*it : nullptr;
}

namespace {

struct DomainSum {
  double sum = 0.0;
  std::uint64_t count = 0;
};

struct KeyAccumulator {
  std::uint64_t count = 0;
  std::vector<double> watts;          // estimation domain, usable readings only
  std::map<PowerDomain, DomainSum> domains;
};

void accumulate(KeyAccumulator& acc, const PowerSample& power, const std::optional<PowerDomain>& domain) {
  ++acc.count;
  for (const auto& r : power.readings) {
    if (!r.usable()) continue;
    auto& d = acc.domains[r.domain];
    d.sum += r.watts;
    ++d.count;
    if (domain && r.domain == *domain) acc.watts.push_back(r.watts);
  }
}

}  // namespace

Profile build_profile(std::span<const SampleRecord> samples, double t_exec_s, const ProfileOptions& options) {
  if (samples.empty()) throw Error(ErrorKind::invalid_input, "empty sample stream");
  if (!(t_exec_s >= 0.0)) throw Error(ErrorKind::invalid_input, "t_exec must be non-negative");

  Profile profile;
  profile.t_exec_s = t_exec_s;
  profile.n = samples.size();
  profile.thread_slots = samples.front().key.size();
  profile.granularity = options.granularity;
  profile.domain = options.domain;
  if (!profile.domain) {
    for (const auto& s : samples) {
      if (!s.power.readings.empty()) {
        profile.domain = s.power.readings.front().domain;
        break;
      }
    }
  }

  std::map<CombinationKey, KeyAccumulator> keys;
  std::map<PowerDomain, DomainTotal> totals;
  std::map<PowerDomain, std::int64_t> last_stamp;
  std::vector<BlockKey> distinct;

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.key.size() != profile.thread_slots || s.key.size() == 0)
      throw Error(ErrorKind::malformed_stream,
                  "sample " + std::to_string(s.seq) + " has " + std::to_string(s.key.size()) +
                      " thread slots, expected " + std::to_string(profile.thread_slots));
    if (i > 0 && (s.seq <= samples[i - 1].seq || s.wall_time_ns < samples[i - 1].wall_time_ns))
      throw Error(ErrorKind::malformed_stream,
                  "sample " + std::to_string(s.seq) + " is out of order");

    if (options.granularity == Granularity::combination) {
      accumulate(keys[s.key], s.power, profile.domain);
    } else {
      distinct.clear();
      for (const auto& b : s.key.blocks)
        if (!b.is_absent() && std::find(distinct.begin(), distinct.end(), b) == distinct.end())
          distinct.push_back(b);
      if (distinct.empty()) distinct.push_back(BlockKey::absent());
      for (const auto& b : distinct) accumulate(keys[CombinationKey::single(b)], s.power, profile.domain);
    }

    for (const auto& r : s.power.readings) {
      auto& total = totals[r.domain];
      total.domain = r.domain;
      auto [it, fresh] = last_stamp.try_emplace(r.domain, 0);
      if (r.usable()) {
        total.integrated_energy_j += r.watts * static_cast<double>(s.power.timestamp_ns - it->second) * 1e-9;
        ++total.usable_readings;
      } else {
        ++profile.flagged_readings;
      }
      it->second = s.power.timestamp_ns;
    }
  }

  const ConfidenceSpec& spec = options.confidence;
  profile.estimates.reserve(keys.size());
  for (auto& [key, acc] : keys) {
    BlockEstimate e;
    e.key = key;
    e.n_k = acc.count;
    e.power_n = acc.watts.size();
    e.p_hat = estimate_proportion(acc.count, profile.n);
    e.t_hat = estimate_time(e.p_hat, t_exec_s);
    const auto p = proportion_ci(e.p_hat, profile.n, spec);
    e.p_ci = p.bounds;
    e.ci_valid = p.valid;
    e.t_ci = {e.p_ci.lower * t_exec_s, e.p_ci.upper * t_exec_s};
    if (!acc.watts.empty()) {
      const auto pw = power_ci(acc.watts, spec);
      e.pow_hat = pw.mean;
      e.pow_s = pw.s;
      e.pow_ci = pw.bounds;
      e.pow_ci_computable = pw.computable;
    }
    e.e_hat = estimate_energy(e.pow_hat, e.t_hat);
    e.e_ci = energy_ci(e.p_ci, t_exec_s, e.pow_ci);
    profile.estimates.push_back(std::move(e));

    for (const auto& [domain, sum] : acc.domains)
      totals[domain].estimated_energy_j += sum.sum / static_cast<double>(sum.count) *
                                           estimate_time(estimate_proportion(acc.count, profile.n), t_exec_s);
  }

  if (options.granularity == Granularity::block) {
    for (const auto& b : options.known_blocks)
      if (!keys.contains(CombinationKey::single(b))) profile.unsampled.push_back(b);
    std::sort(profile.unsampled.begin(), profile.unsampled.end());
    profile.unsampled.erase(std::unique(profile.unsampled.begin(), profile.unsampled.end()),
                            profile.unsampled.end());
  }

  // Domain totals follow the stream's domain order, not name order.
  if (!samples.empty()) {
    std::vector<PowerDomain> order;
    for (const auto& s : samples)
      for (const auto& r : s.power.readings)
        if (std::find(order.begin(), order.end(), r.domain) == order.end()) order.push_back(r.domain);
    for (const auto& d : order) profile.domain_totals.push_back(totals[d]);
  }
  return profile;
}

}  // namespace alea
