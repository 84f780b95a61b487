#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hexnet {

// Randomized equivalence sweep of the decomposed hexagonal convolution
// against the neighborhood oracle, in 32-bit arithmetic.
struct OracleSweepResult {
  std::size_t cases = 0;
  double max_abs_deviation = 0.0;
  double seconds = 0.0;
};
OracleSweepResult hexconv_oracle_sweep(std::size_t cases, std::uint64_t seed);

// One line per checked operation: worst relative error between analytic and
// central-difference gradients, in 64-bit arithmetic.
struct GradCheckLine {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t coords = 0;
  bool whole_model = false;
};
struct GradCheckReport {
  std::vector<GradCheckLine> lines;
  double worst_layer = 0.0;
  double worst_model = 0.0;
  double seconds = 0.0;
};
GradCheckReport run_gradcheck(std::uint64_t seed);

// Median wall time of the decomposed hexagonal convolution against a square
// 3x3 convolution at matched channel counts and spatial extent.
struct BenchResult {
  std::size_t repeats = 0;
  double hex_median_ms = 0.0, hex_min_ms = 0.0, hex_max_ms = 0.0;
  double square_median_ms = 0.0, square_min_ms = 0.0, square_max_ms = 0.0;
  double ratio = 0.0;
};
BenchResult bench_hex_vs_square(std::size_t in_channels, std::size_t out_channels,
                                std::size_t spatial, std::size_t repeats,
                                std::uint64_t seed);

}  // namespace hexnet
