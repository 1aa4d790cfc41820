#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "gpaft/normal.hpp"

namespace gpaft {

// Deterministic random stream. All variates are derived from raw engine bits
// through fixed arithmetic (no std::*_distribution, whose output is
// implementation defined), so a seed reproduces byte-identical results across
// platforms and standard libraries. Parallel work derives one stream per unit
// from (seed, stream) and never shares streams across threads.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1))),
        seed_(seed),
        stream_(stream) {}

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream() const { return stream_; }

  [[nodiscard]] std::uint64_t bits() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  [[nodiscard]] double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1); rejects the single zero atom.
  [[nodiscard]] double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  // Standard normal by inverse CDF. Slower than ziggurat but stateless, which
  // keeps draw sequences aligned when samplers interleave variate types.
  [[nodiscard]] double normal() { return normal_quantile(uniform_open()); }

  [[nodiscard]] double exponential(double mean = 1.0) {
    return -mean * std::log1p(-uniform());
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
};

}  // namespace gpaft
