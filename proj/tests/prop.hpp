#pragma once

// Minimal property runner: each case gets its own seeded generator, and a
// failing case reports the seed that reproduces it.
#include <doctest.h>

#include <cstdint>
#include <random>
#include <string>

namespace prop {

struct Gen {
  std::mt19937_64 rng;

  std::uint64_t u64(std::uint64_t lo, std::uint64_t hi) { return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng); }
  std::int64_t i64(std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }
};

template <typename F>
void for_all(const char* name, int cases, F&& body, std::uint64_t base_seed = 0x5eed) {
  for (int i = 0; i < cases; ++i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    Gen g{std::mt19937_64(seed)};
    INFO(name << " case seed " << seed);
    body(g);
  }
}

}  // namespace prop
