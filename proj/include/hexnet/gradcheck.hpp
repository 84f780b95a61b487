#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "hexnet/tensor.hpp"

namespace hexnet {

// Relative error with a unit floor, so tiny gradients are compared
// absolutely and large ones proportionally.
inline double rel_error(double analytic, double numeric) {
  const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

// Central difference of eval() with respect to one scalar slot. The slot is
// restored before returning.
inline double fd_partial(double& slot, const std::function<double()>& eval,
                         double eps = 1e-6) {
  const double saved = slot;
  slot = saved + eps;
  const double up = eval();
  slot = saved - eps;
  const double down = eval();
  slot = saved;
  return (up - down) / (2.0 * eps);
}

// Scalar probe loss: a fixed random projection turns any tensor-valued map
// into a scalar one, so a single backward pass exercises every output.
inline double probe_loss(const Tensor<double>& out, const Tensor<double>& probe) {
  require_same_shape(out, probe, "probe_loss");
  double total = 0.0;
  const double* a = out.data();
  const double* b = probe.data();
  for (std::size_t i = 0; i < out.size(); ++i) total += a[i] * b[i];
  return total;
}

inline Tensor<double> make_probe(Rng& rng, const Shape4& shape) {
  Tensor<double> p(shape);
  for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] = 2.0 * rng.uniform() - 1.0;
  return p;
}

struct GradCheckStats {
  double max_rel_error = 0.0;
  std::size_t coords = 0;

  void update(double analytic, double numeric) {
    max_rel_error = std::max(max_rel_error, rel_error(analytic, numeric));
    ++coords;
  }
  void merge(const GradCheckStats& other) {
    max_rel_error = std::max(max_rel_error, other.max_rel_error);
    coords += other.coords;
  }
};

// Compares every coordinate of the analytic gradient against a finite
// difference through eval().
inline void check_all_coords(Tensor<double>& value, const Tensor<double>& analytic,
                             const std::function<double()>& eval, GradCheckStats& stats,
                             double eps = 1e-6) {
  require_same_shape(value, analytic, "check_all_coords");
  for (std::size_t i = 0; i < value.size(); ++i) {
    const double numeric = fd_partial(value.data()[i], eval, eps);
    stats.update(analytic.data()[i], numeric);
  }
}

// Compares a random subset of coordinates; used where a full sweep would be
// too slow (whole-model checks).
inline void check_sampled_coords(Tensor<double>& value, const Tensor<double>& analytic,
                                 const std::function<double()>& eval, Rng& rng,
                                 std::size_t samples, GradCheckStats& stats,
                                 double eps = 1e-6) {
  require_same_shape(value, analytic, "check_sampled_coords");
  const std::size_t n = std::min(samples, value.size());
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t i = rng.uniform_index(value.size());
    const double numeric = fd_partial(value.data()[i], eval, eps);
    stats.update(analytic.data()[i], numeric);
  }
}

}  // namespace hexnet
