#pragma once

#include <algorithm>
#include <cstring>
#include <type_traits>
#include <vector>

#include "hexnet/parallel.hpp"
#include "hexnet/tensor.hpp"

namespace hexnet {

// Strided, dilated cross-correlation with zero padding. "Convolution" here
// follows the deep-learning convention: kernels are applied unflipped.
struct ConvSpec {
  std::size_t kh = 1, kw = 1;
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t pad_top = 0, pad_bottom = 0, pad_left = 0, pad_right = 0;
  std::size_t dilation_h = 1, dilation_w = 1;
  std::size_t in_channels = 0, out_channels = 0;

  std::size_t out_h(std::size_t h) const {
    const std::size_t span = dilation_h * (kh - 1) + 1;
    const std::size_t padded = h + pad_top + pad_bottom;
    if (padded < span) throw ShapeError("ConvSpec: kernel taller than padded input");
    return (padded - span) / stride_h + 1;
  }
  std::size_t out_w(std::size_t w) const {
    const std::size_t span = dilation_w * (kw - 1) + 1;
    const std::size_t padded = w + pad_left + pad_right;
    if (padded < span) throw ShapeError("ConvSpec: kernel wider than padded input");
    return (padded - span) / stride_w + 1;
  }
};

namespace detail {

// C[M x N] += A[M x K] * B[K x N], all row-major. Accumulates into a small
// register tile over the full K range before writing back.
template <typename T>
void gemm_accumulate(std::size_t m_count, std::size_t k_count, std::size_t n_count,
                     const T* a, const T* b, T* c) {
  constexpr std::size_t MR = 4;
  constexpr std::size_t NR = 32;
  T tile[MR][NR];
  for (std::size_t m0 = 0; m0 < m_count; m0 += MR) {
    const std::size_t mr = std::min(MR, m_count - m0);
    for (std::size_t n0 = 0; n0 < n_count; n0 += NR) {
      const std::size_t nr = std::min(NR, n_count - n0);
      for (std::size_t i = 0; i < mr; ++i)
        for (std::size_t j = 0; j < nr; ++j) tile[i][j] = c[(m0 + i) * n_count + n0 + j];
      for (std::size_t k = 0; k < k_count; ++k) {
        const T* brow = b + k * n_count + n0;
        for (std::size_t i = 0; i < mr; ++i) {
          const T av = a[(m0 + i) * k_count + k];
          T* trow = tile[i];
          for (std::size_t j = 0; j < nr; ++j) trow[j] += av * brow[j];
        }
      }
      for (std::size_t i = 0; i < mr; ++i)
        for (std::size_t j = 0; j < nr; ++j) c[(m0 + i) * n_count + n0 + j] = tile[i][j];
    }
  }
}

// C[M x P] += A[M x N] * B[P x N]^T (rows of B dotted against rows of A).
template <typename T>
void gemm_abt_accumulate(std::size_t m_count, std::size_t n_count, std::size_t p_count,
                         const T* a, const T* b, T* c) {
  for (std::size_t m = 0; m < m_count; ++m) {
    const T* arow = a + m * n_count;
    for (std::size_t p = 0; p < p_count; ++p) {
      const T* brow = b + p * n_count;
      T acc = 0;
      for (std::size_t n = 0; n < n_count; ++n) acc += arow[n] * brow[n];
      c[m * p_count + p] += acc;
    }
  }
}

// C[K x N] += A[M x K]^T * B[M x N].
template <typename T>
void gemm_atb_accumulate(std::size_t m_count, std::size_t k_count, std::size_t n_count,
                         const T* a, const T* b, T* c) {
  for (std::size_t m = 0; m < m_count; ++m) {
    const T* brow = b + m * n_count;
    for (std::size_t k = 0; k < k_count; ++k) {
      const T av = a[m * k_count + k];
      if (av == T(0)) continue;
      T* crow = c + k * n_count;
      for (std::size_t n = 0; n < n_count; ++n) crow[n] += av * brow[n];
    }
  }
}

// Lowers one sample's C x H x W block to the (C*kh*kw) x (oh*ow) patch
// matrix for the given spec. Out-of-range taps become zero.
template <typename T>
void im2col(const T* src, std::size_t channels, std::size_t height, std::size_t width,
            const ConvSpec& s, std::size_t oh, std::size_t ow, T* cols) {
  for (std::size_t ch = 0; ch < channels; ++ch) {
    for (std::size_t ki = 0; ki < s.kh; ++ki) {
      for (std::size_t kj = 0; kj < s.kw; ++kj) {
        T* dst = cols + ((ch * s.kh + ki) * s.kw + kj) * oh * ow;
        const long row0 = static_cast<long>(ki * s.dilation_h) - static_cast<long>(s.pad_top);
        const long col0 = static_cast<long>(kj * s.dilation_w) - static_cast<long>(s.pad_left);
        for (std::size_t y = 0; y < oh; ++y) {
          const long r = row0 + static_cast<long>(y * s.stride_h);
          T* drow = dst + y * ow;
          if (r < 0 || r >= static_cast<long>(height)) {
            std::fill(drow, drow + ow, T(0));
            continue;
          }
          const T* srow = src + (ch * height + static_cast<std::size_t>(r)) * width;
          // columns of the output whose tap lands inside [0, width)
          std::size_t x_lo = 0;
          if (col0 < 0) {
            x_lo = static_cast<std::size_t>((-col0 + static_cast<long>(s.stride_w) - 1) /
                                            static_cast<long>(s.stride_w));
          }
          std::size_t x_hi = 0;  // exclusive
          if (static_cast<long>(width) > col0) {
            x_hi = std::min<std::size_t>(
                ow, static_cast<std::size_t>((static_cast<long>(width) - 1 - col0) /
                                             static_cast<long>(s.stride_w)) +
                        1);
          }
          x_hi = std::max(x_hi, x_lo);
          std::fill(drow, drow + x_lo, T(0));
          if (s.stride_w == 1) {
            if (x_hi > x_lo)
              std::memcpy(drow + x_lo, srow + col0 + static_cast<long>(x_lo),
                          (x_hi - x_lo) * sizeof(T));
          } else {
            for (std::size_t x = x_lo; x < x_hi; ++x)
              drow[x] = srow[col0 + static_cast<long>(x * s.stride_w)];
          }
          std::fill(drow + x_hi, drow + ow, T(0));
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds patch-matrix values back onto the sample.
template <typename T>
void col2im_accumulate(const T* cols, std::size_t channels, std::size_t height,
                       std::size_t width, const ConvSpec& s, std::size_t oh, std::size_t ow,
                       T* dst) {
  for (std::size_t ch = 0; ch < channels; ++ch) {
    for (std::size_t ki = 0; ki < s.kh; ++ki) {
      for (std::size_t kj = 0; kj < s.kw; ++kj) {
        const T* src = cols + ((ch * s.kh + ki) * s.kw + kj) * oh * ow;
        const long row0 = static_cast<long>(ki * s.dilation_h) - static_cast<long>(s.pad_top);
        const long col0 = static_cast<long>(kj * s.dilation_w) - static_cast<long>(s.pad_left);
        for (std::size_t y = 0; y < oh; ++y) {
          const long r = row0 + static_cast<long>(y * s.stride_h);
          if (r < 0 || r >= static_cast<long>(height)) continue;
          T* drow = dst + (ch * height + static_cast<std::size_t>(r)) * width;
          const T* srow = src + y * ow;
          for (std::size_t x = 0; x < ow; ++x) {
            const long cc = col0 + static_cast<long>(x * s.stride_w);
            if (cc >= 0 && cc < static_cast<long>(width)) drow[cc] += srow[x];
          }
        }
      }
    }
  }
}

template <typename T>
std::vector<T>& conv_scratch() {
  thread_local std::vector<T> buf;
  return buf;
}

template <typename T>
void validate_conv_args(const Tensor<T>& input, const Tensor<T>& weights, const ConvSpec& s) {
  if (input.c() != s.in_channels) {
    throw ShapeError("conv2d: input has " + std::to_string(input.c()) +
                     " channels, spec expects " + std::to_string(s.in_channels));
  }
  if (weights.n() != s.out_channels || weights.c() != s.in_channels ||
      weights.h() != s.kh || weights.w() != s.kw) {
    throw ShapeError("conv2d: weight shape " + shape_string(weights.shape()) +
                     " does not match spec");
  }
}

}  // namespace detail

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weights;
  std::vector<T> bias;
};

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights,
                         const std::vector<std::type_identity_t<T>>* bias,
                         const ConvSpec& spec) {
  detail::validate_conv_args(input, weights, spec);
  if (bias && bias->size() != spec.out_channels) {
    throw ShapeError("conv2d: bias length " + std::to_string(bias->size()) +
                     " does not match out_channels");
  }
  const std::size_t oh = spec.out_h(input.h());
  const std::size_t ow = spec.out_w(input.w());
  const std::size_t patch = spec.in_channels * spec.kh * spec.kw;
  const std::size_t cells = oh * ow;
  Tensor<T> out(input.n(), spec.out_channels, oh, ow);

  parallel_chunks(0, input.n(), [&](std::size_t, std::size_t lo, std::size_t hi) {
    auto& cols = detail::conv_scratch<T>();
    cols.resize(patch * cells);
    for (std::size_t n = lo; n < hi; ++n) {
      detail::im2col(input.sample_data(n), input.c(), input.h(), input.w(), spec, oh, ow,
                     cols.data());
      T* dst = out.sample_data(n);
      for (std::size_t o = 0; o < spec.out_channels; ++o) {
        const T b = bias ? (*bias)[o] : T(0);
        std::fill(dst + o * cells, dst + (o + 1) * cells, b);
      }
      detail::gemm_accumulate(spec.out_channels, patch, cells, weights.data(), cols.data(), dst);
    }
  });
  return out;
}

// Exact adjoints of conv2d_forward with respect to input, weights and bias.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const Tensor<T>& weights, const ConvSpec& spec) {
  detail::validate_conv_args(input, weights, spec);
  const std::size_t oh = spec.out_h(input.h());
  const std::size_t ow = spec.out_w(input.w());
  if (grad_out.n() != input.n() || grad_out.c() != spec.out_channels || grad_out.h() != oh ||
      grad_out.w() != ow) {
    throw ShapeError("conv2d_backward: grad shape " + shape_string(grad_out.shape()) +
                     " does not match forward output");
  }
  const std::size_t patch = spec.in_channels * spec.kh * spec.kw;
  const std::size_t cells = oh * ow;

  ConvGrads<T> grads;
  grads.input = Tensor<T>(input.shape());
  grads.weights = Tensor<T>(weights.shape());
  grads.bias.assign(spec.out_channels, T(0));

  // Per-chunk weight/bias partials are reduced in chunk order afterwards, so
  // the result is independent of worker scheduling for a fixed thread count.
  const std::size_t max_chunks =
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), std::max<std::size_t>(input.n(), 1));
  std::vector<Tensor<T>> w_partial(max_chunks);
  std::vector<std::vector<T>> b_partial(max_chunks);

  parallel_chunks(0, input.n(), [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
    auto& scratch = detail::conv_scratch<T>();
    scratch.resize(2 * patch * cells);
    T* cols = scratch.data();
    T* gcols = scratch.data() + patch * cells;
    Tensor<T> gw(weights.shape());
    std::vector<T> gb(spec.out_channels, T(0));
    for (std::size_t n = lo; n < hi; ++n) {
      detail::im2col(input.sample_data(n), input.c(), input.h(), input.w(), spec, oh, ow, cols);
      const T* g = grad_out.sample_data(n);
      // d weights += g * cols^T
      detail::gemm_abt_accumulate(spec.out_channels, cells, patch, g, cols, gw.data());
      // d cols = W^T * g, then scatter back onto the input
      std::fill(gcols, gcols + patch * cells, T(0));
      detail::gemm_atb_accumulate(spec.out_channels, patch, cells, weights.data(), g, gcols);
      detail::col2im_accumulate(gcols, input.c(), input.h(), input.w(), spec, oh, ow,
                                grads.input.sample_data(n));
      for (std::size_t o = 0; o < spec.out_channels; ++o) {
        T acc = 0;
        const T* row = g + o * cells;
        for (std::size_t i = 0; i < cells; ++i) acc += row[i];
        gb[o] += acc;
      }
    }
    w_partial[chunk] = std::move(gw);
    b_partial[chunk] = std::move(gb);
  });

  for (std::size_t c = 0; c < max_chunks; ++c) {
    if (w_partial[c].empty()) continue;
    add_inplace(grads.weights, w_partial[c]);
    for (std::size_t o = 0; o < spec.out_channels; ++o) grads.bias[o] += b_partial[c][o];
  }
  return grads;
}

}  // namespace hexnet
