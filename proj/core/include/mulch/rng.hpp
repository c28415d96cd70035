#pragma once

// Deterministic sampling helpers. std::mt19937_64 is specified exactly by the
// standard, but the std::*_distribution adapters are not; every draw that has
// to reproduce bit for bit goes through the functions here instead.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace mulch {

// SplitMix64 finalizer; derives independent child seeds from a master seed.
[[nodiscard]] inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

[[nodiscard]] inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64{mix_seed(seed, stream)};
}

// Uniform on [0, 1) with 53 random mantissa bits.
[[nodiscard]] inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

[[nodiscard]] inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Exponential waiting time with the given rate.
[[nodiscard]] inline double exponential(std::mt19937_64& rng, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
  return -std::log1p(-uniform01(rng)) / rate;
}

// Uniform integer in [0, n). Negligible modulo-free bias via the 53-bit draw.
[[nodiscard]] inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

// Index draw proportional to nonnegative weights (linear cumulative scan).
[[nodiscard]] inline std::size_t categorical(std::mt19937_64& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("categorical: weights must be nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("categorical: weights must have positive sum");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

}  // namespace mulch
