#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

#include "modalms/errors.hpp"

namespace modalms::rng {

//! SplitMix64 finalizer. Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

//! Derives an independent stream seed from a parent seed and a key.
//! Used to give every replicate and every pipeline stage its own stream
//! so results do not depend on evaluation order or thread count.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t key) {
  return mix64(seed ^ mix64(key * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL));
}

//! Stream keys for the stages of an experiment replicate.
enum class Stage : std::uint64_t {
  generate = 0x11,
  mask = 0x22,
  impute = 0x33,
  pilot = 0x44,
  bandwidth = 0x55,
};

inline std::uint64_t derive(std::uint64_t seed, Stage stage, std::uint64_t key) {
  return derive(derive(seed, static_cast<std::uint64_t>(stage)), key);
}

//! Deterministic counter-free generator with a pinned output sequence.
//! All distributions are implemented here, by hand, so that a given seed
//! produces the same stream on every platform and standard library.
class Engine {
 public:
  explicit Engine(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  //! Uniform draw in [0, 1), with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  //! Uniform draw in (0, 1]. Safe as a log argument.
  double uniform01_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  //! Normal draw by Box-Muller. Consumes exactly two uniforms per call;
  //! nothing is cached, so interleaving with other draws stays reproducible.
  double normal(double mean, double sd) {
    double u1 = uniform01_open();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  //! Index draw proportional to non-negative weights. Consumes one uniform.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw ConfigError("categorical weights must be finite and non-negative");
      total += w;
    }
    if (!(total > 0.0))
      throw ConfigError("categorical weights must have positive total mass");
    double target = uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (target < acc) return i;
    }
    return weights.size() - 1;
  }

 private:
  std::uint64_t state_;
};

}  // namespace modalms::rng
