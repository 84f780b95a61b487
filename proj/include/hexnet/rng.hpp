#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "hexnet/error.hpp"

namespace hexnet {

// Deterministic 64-bit generator. The same seed yields a bit-identical raw
// stream on the same build. Every derived draw below consumes a fixed or
// state-determined number of raw outputs, so a serialized engine resumes the
// exact stream.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n), n > 0.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t reject_band = (kMax % n + 1) % n;
    for (;;) {
      const std::uint64_t x = next_u64();
      if (reject_band == 0 || x < kMax - reject_band + 1) return x % n;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller. Consumes exactly two raw draws and keeps
  // no cached half-pair, so engine state alone captures the stream position.
  double normal() {
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::string serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void deserialize(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
    if (is.fail()) throw FormatError("Rng::deserialize: malformed engine state");
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace hexnet
