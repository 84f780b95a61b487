#pragma once

#include <type_traits>
#include <vector>

#include "hexnet/conv2d.hpp"
#include "hexnet/hex_geometry.hpp"
#include "hexnet/tensor.hpp"

namespace hexnet {

// A hexagonal kernel has seven trainable scalars per (out, in) channel pair,
// stored as two dense sub-kernels so both can be fed to the square engine:
//   side   (O, I, 2, 3)  holds the four diagonal weights; its middle column
//                        is structurally zero and must stay zero
//   column (O, I, 3, 1)  holds top, center, bottom
template <typename T>
struct HexKernel {
  Tensor<T> side;
  Tensor<T> column;

  HexKernel() = default;
  HexKernel(std::size_t out_channels, std::size_t in_channels)
      : side(out_channels, in_channels, kSideKernelRows, kSideKernelCols),
        column(out_channels, in_channels, kColumnKernelRows, 1) {}

  std::size_t out_channels() const { return column.n(); }
  std::size_t in_channels() const { return column.c(); }

  T& weight(HexWeight w, std::size_t o, std::size_t i) {
    if (is_side_weight(w)) {
      const SideSlot slot = side_kernel_slot(w);
      return side(o, i, slot.row, slot.col);
    }
    return column(o, i, column_kernel_row(w), 0);
  }
  T weight(HexWeight w, std::size_t o, std::size_t i) const {
    return const_cast<HexKernel*>(this)->weight(w, o, i);
  }
};

namespace detail {

template <typename T>
void validate_hex_args(const Tensor<T>& input, const Tensor<T>& side,
                       const Tensor<T>& column) {
  if (side.h() != kSideKernelRows || side.w() != kSideKernelCols) {
    throw ShapeError("hexconv: side kernel shape " + shape_string(side.shape()) +
                     ", expected (*,*,2,3)");
  }
  if (column.h() != kColumnKernelRows || column.w() != 1) {
    throw ShapeError("hexconv: column kernel shape " + shape_string(column.shape()) +
                     ", expected (*,*,3,1)");
  }
  if (side.n() != column.n() || side.c() != column.c()) {
    throw ShapeError("hexconv: side kernel " + shape_string(side.shape()) +
                     " and column kernel " + shape_string(column.shape()) + " disagree");
  }
  if (input.c() != side.c()) {
    throw ShapeError("hexconv: input has " + std::to_string(input.c()) +
                     " channels, kernel expects " + std::to_string(side.c()));
  }
}

inline ConvSpec branch_spec(const PlanBranch& b, std::size_t in_channels,
                            std::size_t out_channels) {
  ConvSpec s;
  if (b.kernel == SubKernel::Side) {
    s.kh = kSideKernelRows;
    s.kw = kSideKernelCols;
  } else {
    s.kh = kColumnKernelRows;
    s.kw = 1;
  }
  s.stride_h = b.stride_rows;
  s.stride_w = b.stride_cols;
  s.pad_top = b.pad.top;
  s.pad_bottom = b.pad.bottom;
  s.pad_left = b.pad.left;
  s.pad_right = b.pad.right;
  s.in_channels = in_channels;
  s.out_channels = out_channels;
  return s;
}

}  // namespace detail

// Direct evaluation from the neighborhood table. Quadratic in kernel reach
// and unvectorised; exists as the oracle the decomposed path is checked
// against, and stays the source of truth for boundary behaviour.
template <typename T>
Tensor<T> hexconv_forward_reference(const Tensor<T>& input, const Tensor<T>& side,
                                    const Tensor<T>& column,
                                    const std::vector<std::type_identity_t<T>>* bias) {
  detail::validate_hex_args(input, side, column);
  const std::size_t out_ch = side.n();
  if (bias && bias->size() != out_ch) {
    throw ShapeError("hexconv: bias length does not match out_channels");
  }
  HexKernel<T> k;
  k.side = side;
  k.column = column;
  Tensor<T> out(input.n(), out_ch, input.h(), input.w());
  const long height = static_cast<long>(input.h());
  const long width = static_cast<long>(input.w());
  for (std::size_t n = 0; n < input.n(); ++n) {
    for (std::size_t o = 0; o < out_ch; ++o) {
      for (long r = 0; r < height; ++r) {
        for (long c = 0; c < width; ++c) {
          T acc = bias ? (*bias)[o] : T(0);
          for (const HexTap& tap : neighborhood(r, c)) {
            if (tap.row < 0 || tap.row >= height || tap.col < 0 || tap.col >= width) continue;
            for (std::size_t i = 0; i < input.c(); ++i) {
              acc += k.weight(tap.weight, o, i) *
                     input(n, i, static_cast<std::size_t>(tap.row),
                           static_cast<std::size_t>(tap.col));
            }
          }
          out(n, o, static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
        }
      }
    }
  }
  return out;
}

// Decomposed evaluation: two strided passes of the side kernel produce the
// even- and odd-column halves, their interleave is summed with a vertical
// pass of the column kernel. Matches the reference exactly up to float
// summation order.
template <typename T>
Tensor<T> hexconv_forward(const Tensor<T>& input, const Tensor<T>& side,
                          const Tensor<T>& column,
                          const std::vector<std::type_identity_t<T>>* bias) {
  detail::validate_hex_args(input, side, column);
  const DecompositionPlan plan = decomposition_plan();
  const std::size_t in_ch = input.c();
  const std::size_t out_ch = side.n();

  const ConvSpec even_spec = detail::branch_spec(plan.even_columns, in_ch, out_ch);
  const ConvSpec odd_spec = detail::branch_spec(plan.odd_columns, in_ch, out_ch);
  const ConvSpec vert_spec = detail::branch_spec(plan.vertical, in_ch, out_ch);

  Tensor<T> even = conv2d_forward(input, side, nullptr, even_spec);
  Tensor<T> odd;
  if (input.w() >= 2) {
    odd = conv2d_forward(input, side, nullptr, odd_spec);
  } else {
    odd = Tensor<T>(input.n(), out_ch, input.h(), 0);
  }
  // Bias rides on the vertical branch so it lands on every cell exactly once.
  Tensor<T> vert = conv2d_forward(input, column, bias, vert_spec);
  Tensor<T> out = merge_columns(even, odd);
  add_inplace(out, vert);
  return out;
}

template <typename T>
struct HexConvGrads {
  Tensor<T> input;
  Tensor<T> side;
  Tensor<T> column;
  std::vector<T> bias;
};

// Adjoint of hexconv_forward. The incoming gradient splits by column parity
// into the two side branches and passes whole through the vertical branch;
// the two side-kernel contributions sum. Middle-column slots of the side
// gradient are forced to zero so the structural zeros never move.
template <typename T>
HexConvGrads<T> hexconv_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                                 const Tensor<T>& side, const Tensor<T>& column) {
  detail::validate_hex_args(input, side, column);
  if (grad_out.n() != input.n() || grad_out.c() != side.n() || grad_out.h() != input.h() ||
      grad_out.w() != input.w()) {
    throw ShapeError("hexconv_backward: grad shape " + shape_string(grad_out.shape()) +
                     " does not match output " + shape_string(input.shape()));
  }
  const DecompositionPlan plan = decomposition_plan();
  const std::size_t in_ch = input.c();
  const std::size_t out_ch = side.n();
  const ConvSpec even_spec = detail::branch_spec(plan.even_columns, in_ch, out_ch);
  const ConvSpec odd_spec = detail::branch_spec(plan.odd_columns, in_ch, out_ch);
  const ConvSpec vert_spec = detail::branch_spec(plan.vertical, in_ch, out_ch);

  const Tensor<T> grad_even = split_even_columns(grad_out);
  const Tensor<T> grad_odd = split_odd_columns(grad_out);

  HexConvGrads<T> grads;
  ConvGrads<T> even = conv2d_backward(grad_even, input, side, even_spec);
  grads.input = std::move(even.input);
  grads.side = std::move(even.weights);
  if (grad_odd.w() > 0) {
    ConvGrads<T> odd = conv2d_backward(grad_odd, input, side, odd_spec);
    add_inplace(grads.input, odd.input);
    add_inplace(grads.side, odd.weights);
  }
  ConvGrads<T> vert = conv2d_backward(grad_out, input, column, vert_spec);
  add_inplace(grads.input, vert.input);
  grads.column = std::move(vert.weights);
  grads.bias = std::move(vert.bias);

  for (std::size_t o = 0; o < out_ch; ++o)
    for (std::size_t i = 0; i < in_ch; ++i)
      grads.side(o, i, 0, 1) = grads.side(o, i, 1, 1) = T(0);
  return grads;
}

// Keeps rows and columns with even index; extents round up. Used after a
// full-resolution hexagonal pass to halve the grid.
template <typename T>
Tensor<T> subsample2(const Tensor<T>& t) {
  Tensor<T> out(t.n(), t.c(), (t.h() + 1) / 2, (t.w() + 1) / 2);
  for (std::size_t n = 0; n < t.n(); ++n)
    for (std::size_t c = 0; c < t.c(); ++c) {
      const T* src = t.plane_data(n, c);
      T* dst = out.plane_data(n, c);
      for (std::size_t r = 0; r < out.h(); ++r)
        for (std::size_t x = 0; x < out.w(); ++x)
          dst[r * out.w() + x] = src[2 * r * t.w() + 2 * x];
    }
  return out;
}

// Adjoint of subsample2: gradient scatters onto even positions of a grid
// with the given extents, everything else zero.
template <typename T>
Tensor<T> subsample2_backward(const Tensor<T>& grad_out, std::size_t in_h, std::size_t in_w) {
  if (grad_out.h() != (in_h + 1) / 2 || grad_out.w() != (in_w + 1) / 2) {
    throw ShapeError("subsample2_backward: grad shape " + shape_string(grad_out.shape()) +
                     " does not match extents " + std::to_string(in_h) + "x" +
                     std::to_string(in_w));
  }
  Tensor<T> out(grad_out.n(), grad_out.c(), in_h, in_w);
  for (std::size_t n = 0; n < out.n(); ++n)
    for (std::size_t c = 0; c < out.c(); ++c) {
      const T* src = grad_out.plane_data(n, c);
      T* dst = out.plane_data(n, c);
      for (std::size_t r = 0; r < grad_out.h(); ++r)
        for (std::size_t x = 0; x < grad_out.w(); ++x)
          dst[2 * r * in_w + 2 * x] = src[r * grad_out.w() + x];
    }
  return out;
}

}  // namespace hexnet
