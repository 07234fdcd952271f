#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace khoplab {

/// splitmix64 step; the workhorse for seed derivation and counter-based
/// pseudo-random draws. Pure integer arithmetic, so results are identical
/// across platforms and runs.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
  return splitmix64(s);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

inline double to_unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Counter-based uniform draw: a pure function of (seed, stream, counter).
inline double prf_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  std::uint64_t s = mix_seed(mix_seed(seed, stream), counter);
  return to_unit_interval(splitmix64(s));
}

/// Small sequential generator for Monte Carlo trials and solver restarts.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }
  double uniform() { return to_unit_interval(next_u64()); }

  /// Inverse-CDF sample from cumulative weights (last entry ~ 1).
  int sample_cumulative(std::span<const double> cumulative) {
    const double u = uniform();
    for (std::size_t i = 0; i + 1 < cumulative.size(); ++i) {
      if (u < cumulative[i]) return static_cast<int>(i);
    }
    return static_cast<int>(cumulative.size()) - 1;
  }

 private:
  std::uint64_t state_;
};

inline std::vector<double> cumulative_from(std::span<const double> weights) {
  std::vector<double> cum(weights.size());
  double running = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    running += weights[i];
    cum[i] = running;
  }
  return cum;
}

inline int sample_cumulative_at(std::span<const double> cumulative, double u) {
  for (std::size_t i = 0; i + 1 < cumulative.size(); ++i) {
    if (u < cumulative[i]) return static_cast<int>(i);
  }
  return static_cast<int>(cumulative.size()) - 1;
}

}  // namespace khoplab
