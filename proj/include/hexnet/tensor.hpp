#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <string>
#include <type_traits>
#include <vector>

#include "hexnet/error.hpp"
#include "hexnet/rng.hpp"

namespace hexnet {

using Shape4 = std::array<std::size_t, 4>;

inline std::string shape_string(const Shape4& s) {
  return "(" + std::to_string(s[0]) + "," + std::to_string(s[1]) + "," +
         std::to_string(s[2]) + "," + std::to_string(s[3]) + ")";
}

// Dense rank-4 array in (batch, channel, row, column) order with the column
// index contiguous. Float for training, double for gradient checking.
template <typename T>
class Tensor {
  static_assert(std::is_floating_point_v<T>);

public:
  Tensor() = default;
  Tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, T fill = T(0))
      : shape_{n, c, h, w}, data_(n * c * h * w, fill) {}
  explicit Tensor(const Shape4& s, T fill = T(0)) : Tensor(s[0], s[1], s[2], s[3], fill) {}

  const Shape4& shape() const { return shape_; }
  std::size_t n() const { return shape_[0]; }
  std::size_t c() const { return shape_[1]; }
  std::size_t h() const { return shape_[2]; }
  std::size_t w() const { return shape_[3]; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane() const { return shape_[2] * shape_[3]; }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const T& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  // Pointer to the H*W plane of (sample, channel).
  T* plane_data(std::size_t n, std::size_t c) {
    return data_.data() + (n * shape_[1] + c) * plane();
  }
  const T* plane_data(std::size_t n, std::size_t c) const {
    return data_.data() + (n * shape_[1] + c) * plane();
  }

  // Pointer to all C*H*W values of one sample.
  T* sample_data(std::size_t n) { return data_.data() + n * shape_[1] * plane(); }
  const T* sample_data(std::size_t n) const { return data_.data() + n * shape_[1] * plane(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data()[i] = static_cast<U>(data_[i]);
    return out;
  }

private:
  Shape4 shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
}

// Zero padding along rows and columns; interior equals the input.
template <typename T>
Tensor<T> pad2d(const Tensor<T>& t, std::size_t top, std::size_t bottom,
                std::size_t left, std::size_t right) {
  Tensor<T> out(t.n(), t.c(), t.h() + top + bottom, t.w() + left + right);
  for (std::size_t n = 0; n < t.n(); ++n) {
    for (std::size_t c = 0; c < t.c(); ++c) {
      const T* src = t.plane_data(n, c);
      T* dst = out.plane_data(n, c);
      for (std::size_t r = 0; r < t.h(); ++r) {
        std::memcpy(dst + (r + top) * out.w() + left, src + r * t.w(), t.w() * sizeof(T));
      }
    }
  }
  return out;
}

// Removes the given margins; inverse of pad2d with the same counts.
template <typename T>
Tensor<T> crop2d(const Tensor<T>& t, std::size_t top, std::size_t bottom,
                 std::size_t left, std::size_t right) {
  if (top + bottom > t.h() || left + right > t.w()) {
    throw ShapeError("crop2d: margins exceed extents " + shape_string(t.shape()));
  }
  Tensor<T> out(t.n(), t.c(), t.h() - top - bottom, t.w() - left - right);
  for (std::size_t n = 0; n < t.n(); ++n) {
    for (std::size_t c = 0; c < t.c(); ++c) {
      const T* src = t.plane_data(n, c);
      T* dst = out.plane_data(n, c);
      for (std::size_t r = 0; r < out.h(); ++r) {
        std::memcpy(dst + r * out.w(), src + (r + top) * t.w() + left, out.w() * sizeof(T));
      }
    }
  }
  return out;
}

// Interleaves columns: output column 2j comes from p1, column 2j+1 from p2.
// p1 may hold one extra column (odd total width).
template <typename T>
Tensor<T> merge_columns(const Tensor<T>& p1, const Tensor<T>& p2) {
  if (p1.n() != p2.n() || p1.c() != p2.c() || p1.h() != p2.h()) {
    throw ShapeError("merge_columns: shape mismatch " + shape_string(p1.shape()) + " vs " +
                     shape_string(p2.shape()));
  }
  if (p1.w() != p2.w() && p1.w() != p2.w() + 1) {
    throw ShapeError("merge_columns: widths " + std::to_string(p1.w()) + " and " +
                     std::to_string(p2.w()) + " cannot interleave");
  }
  Tensor<T> out(p1.n(), p1.c(), p1.h(), p1.w() + p2.w());
  for (std::size_t n = 0; n < p1.n(); ++n) {
    for (std::size_t c = 0; c < p1.c(); ++c) {
      const T* a = p1.plane_data(n, c);
      const T* b = p2.plane_data(n, c);
      T* dst = out.plane_data(n, c);
      for (std::size_t r = 0; r < p1.h(); ++r) {
        T* row = dst + r * out.w();
        const T* ra = a + r * p1.w();
        const T* rb = b + r * p2.w();
        for (std::size_t j = 0; j < p2.w(); ++j) {
          row[2 * j] = ra[j];
          row[2 * j + 1] = rb[j];
        }
        if (p1.w() > p2.w()) row[out.w() - 1] = ra[p1.w() - 1];
      }
    }
  }
  return out;
}

// Columns with even index, width ceil(W/2).
template <typename T>
Tensor<T> split_even_columns(const Tensor<T>& t) {
  Tensor<T> out(t.n(), t.c(), t.h(), (t.w() + 1) / 2);
  for (std::size_t n = 0; n < t.n(); ++n)
    for (std::size_t c = 0; c < t.c(); ++c)
      for (std::size_t r = 0; r < t.h(); ++r) {
        const T* src = t.plane_data(n, c) + r * t.w();
        T* dst = out.plane_data(n, c) + r * out.w();
        for (std::size_t j = 0; j < out.w(); ++j) dst[j] = src[2 * j];
      }
  return out;
}

// Columns with odd index, width floor(W/2).
template <typename T>
Tensor<T> split_odd_columns(const Tensor<T>& t) {
  Tensor<T> out(t.n(), t.c(), t.h(), t.w() / 2);
  for (std::size_t n = 0; n < t.n(); ++n)
    for (std::size_t c = 0; c < t.c(); ++c)
      for (std::size_t r = 0; r < t.h(); ++r) {
        const T* src = t.plane_data(n, c) + r * t.w();
        T* dst = out.plane_data(n, c) + r * out.w();
        for (std::size_t j = 0; j < out.w(); ++j) dst[j] = src[2 * j + 1];
      }
  return out;
}

template <typename T>
Tensor<T> elementwise_add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "elementwise_add");
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] + pb[i];
  return out;
}

template <typename T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add_inplace");
  T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

// He-style normal init: i.i.d. N(0, 2/fan_in).
template <typename T>
Tensor<T> kaiming_init(Rng& rng, const Shape4& shape, std::size_t fan_in) {
  if (fan_in == 0) throw std::invalid_argument("kaiming_init: fan_in must be positive");
  Tensor<T> out(shape);
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  T* p = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) p[i] = static_cast<T>(rng.normal(0.0, stddev));
  return out;
}

}  // namespace hexnet
