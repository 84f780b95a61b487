#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "hexnet/conv2d.hpp"
#include "hexnet/parallel.hpp"
#include "hexnet/rng.hpp"

using namespace hexnet;

namespace {

template <typename T>
Tensor<T> random_tensor(Rng& rng, std::size_t n, std::size_t c, std::size_t h,
                        std::size_t w) {
  Tensor<T> t(n, c, h, w);
  for (std::size_t i = 0; i < t.size(); ++i)
    t.data()[i] = static_cast<T>(rng.uniform() * 2.0 - 1.0);
  return t;
}

// Direct six-loop evaluation straight from the definition of a padded,
// strided, dilated cross-correlation. Deliberately shares no code with the
// implementation under test.
template <typename T>
Tensor<T> direct_conv(const Tensor<T>& input, const Tensor<T>& weights,
                      const std::vector<T>* bias, const ConvSpec& s) {
  Tensor<T> out(input.n(), s.out_channels, s.out_h(input.h()), s.out_w(input.w()));
  for (std::size_t n = 0; n < out.n(); ++n)
    for (std::size_t o = 0; o < out.c(); ++o)
      for (std::size_t y = 0; y < out.h(); ++y)
        for (std::size_t x = 0; x < out.w(); ++x) {
          double acc = bias ? (*bias)[o] : 0.0;
          for (std::size_t i = 0; i < s.in_channels; ++i)
            for (std::size_t ky = 0; ky < s.kh; ++ky)
              for (std::size_t kx = 0; kx < s.kw; ++kx) {
                const long ry = static_cast<long>(y * s.stride_h + ky * s.dilation_h) -
                                static_cast<long>(s.pad_top);
                const long rx = static_cast<long>(x * s.stride_w + kx * s.dilation_w) -
                                static_cast<long>(s.pad_left);
                if (ry < 0 || ry >= static_cast<long>(input.h()) || rx < 0 ||
                    rx >= static_cast<long>(input.w()))
                  continue;
                acc += static_cast<double>(input(n, i, ry, rx)) * weights(o, i, ky, kx);
              }
          out(n, o, y, x) = static_cast<T>(acc);
        }
  return out;
}

ConvSpec random_spec(Rng& rng, std::size_t in_ch, std::size_t out_ch) {
  ConvSpec s;
  s.kh = 1 + rng.uniform_index(3);
  s.kw = 1 + rng.uniform_index(3);
  s.stride_h = 1 + rng.uniform_index(2);
  s.stride_w = 1 + rng.uniform_index(2);
  s.pad_top = rng.uniform_index(3);
  s.pad_bottom = rng.uniform_index(3);
  s.pad_left = rng.uniform_index(3);
  s.pad_right = rng.uniform_index(3);
  s.dilation_h = 1 + rng.uniform_index(2);
  s.dilation_w = 1 + rng.uniform_index(2);
  s.in_channels = in_ch;
  s.out_channels = out_ch;
  return s;
}

}  // namespace

TEST_CASE("output extents formula") {
  ConvSpec s;
  s.kh = 3;
  s.kw = 3;
  s.pad_top = s.pad_bottom = s.pad_left = s.pad_right = 1;
  CHECK(s.out_h(32) == 32);
  CHECK(s.out_w(32) == 32);
  s.stride_h = s.stride_w = 2;
  CHECK(s.out_h(32) == 16);
  CHECK(s.out_w(7) == 4);
  s.dilation_h = 2;
  CHECK(s.out_h(32) == 15);

  ConvSpec tall;
  tall.kh = 5;
  CHECK_THROWS_AS(tall.out_h(4), ShapeError);
}

TEST_CASE("identity kernel passes the input through") {
  Rng rng(1);
  Tensor<float> input = random_tensor<float>(rng, 2, 3, 4, 5);
  Tensor<float> weights(3, 3, 1, 1);
  for (std::size_t o = 0; o < 3; ++o) weights(o, o, 0, 0) = 1.0f;
  ConvSpec s;
  s.in_channels = 3;
  s.out_channels = 3;
  Tensor<float> out = conv2d_forward(input, weights, nullptr, s);
  REQUIRE(out.same_shape(input));
  for (std::size_t i = 0; i < input.size(); ++i) CHECK(out.data()[i] == input.data()[i]);
}

TEST_CASE("bias fills the output before accumulation") {
  Tensor<float> input(1, 1, 2, 2);
  Tensor<float> weights(2, 1, 1, 1);
  std::vector<float> bias = {0.5f, -1.5f};
  ConvSpec s;
  s.in_channels = 1;
  s.out_channels = 2;
  Tensor<float> out = conv2d_forward(input, weights, &bias, s);
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 2; ++x) {
      CHECK(out(0, 0, y, x) == 0.5f);
      CHECK(out(0, 1, y, x) == -1.5f);
    }
}

TEST_CASE("forward matches the direct evaluation over random cases") {
  Rng rng(42);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t in_ch = 1 + rng.uniform_index(4);
    const std::size_t out_ch = 1 + rng.uniform_index(4);
    const std::size_t n = 1 + rng.uniform_index(2);
    const std::size_t h = 1 + rng.uniform_index(7);
    const std::size_t w = 1 + rng.uniform_index(7);
    ConvSpec s = random_spec(rng, in_ch, out_ch);
    const std::size_t span_h = s.dilation_h * (s.kh - 1) + 1;
    const std::size_t span_w = s.dilation_w * (s.kw - 1) + 1;
    if (h + s.pad_top + s.pad_bottom < span_h || w + s.pad_left + s.pad_right < span_w)
      continue;

    Tensor<float> input = random_tensor<float>(rng, n, in_ch, h, w);
    Tensor<float> weights = random_tensor<float>(rng, out_ch, in_ch, s.kh, s.kw);
    std::vector<float> bias(out_ch);
    for (auto& b : bias) b = static_cast<float>(rng.uniform() - 0.5);

    Tensor<float> fast = conv2d_forward(input, weights, &bias, s);
    Tensor<float> slow = direct_conv(input, weights, &bias, s);
    REQUIRE(fast.same_shape(slow));
    for (std::size_t i = 0; i < fast.size(); ++i)
      CHECK(fast.data()[i] == doctest::Approx(slow.data()[i]).epsilon(1e-5));
  }
}

TEST_CASE("forward validates shapes") {
  Rng rng(3);
  Tensor<float> input = random_tensor<float>(rng, 1, 2, 4, 4);
  ConvSpec s;
  s.kh = s.kw = 3;
  s.in_channels = 2;
  s.out_channels = 4;

  Tensor<float> wrong_in_ch(4, 3, 3, 3);
  CHECK_THROWS_AS(conv2d_forward(input, wrong_in_ch, nullptr, s), ShapeError);

  Tensor<float> wrong_kernel(4, 2, 2, 3);
  CHECK_THROWS_AS(conv2d_forward(input, wrong_kernel, nullptr, s), ShapeError);

  Tensor<float> weights(4, 2, 3, 3);
  std::vector<float> short_bias = {1.0f};
  CHECK_THROWS_AS(conv2d_forward(input, weights, &short_bias, s), ShapeError);

  ConvSpec too_big = s;
  too_big.kh = 5;
  Tensor<float> big_kernel(4, 2, 5, 3);
  CHECK_THROWS_AS(conv2d_forward(input, big_kernel, nullptr, too_big), ShapeError);
}

TEST_CASE("backward matches central differences") {
  Rng rng(7);
  ConvSpec s;
  s.kh = 3;
  s.kw = 2;
  s.stride_h = 2;
  s.stride_w = 1;
  s.pad_top = 1;
  s.pad_bottom = 0;
  s.pad_left = 2;
  s.pad_right = 1;
  s.dilation_h = 1;
  s.dilation_w = 2;
  s.in_channels = 3;
  s.out_channels = 4;

  Tensor<double> input = random_tensor<double>(rng, 2, 3, 5, 6);
  Tensor<double> weights = random_tensor<double>(rng, 4, 3, 3, 2);
  std::vector<double> bias(4);
  for (auto& b : bias) b = rng.uniform() - 0.5;
  Tensor<double> probe = random_tensor<double>(rng, 2, 4, s.out_h(5), s.out_w(6));

  auto loss = [&]() {
    Tensor<double> out = conv2d_forward(input, weights, &bias, s);
    double acc = 0;
    for (std::size_t i = 0; i < out.size(); ++i) acc += out.data()[i] * probe.data()[i];
    return acc;
  };

  ConvGrads<double> grads = conv2d_backward(probe, input, weights, s);

  const double eps = 1e-6;
  auto check_slot = [&](double& slot, double analytic) {
    const double saved = slot;
    slot = saved + eps;
    const double up = loss();
    slot = saved - eps;
    const double down = loss();
    slot = saved;
    const double numeric = (up - down) / (2 * eps);
    const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    CHECK(std::abs(analytic - numeric) / denom < 1e-7);
  };

  for (std::size_t i = 0; i < input.size(); ++i)
    check_slot(input.data()[i], grads.input.data()[i]);
  for (std::size_t i = 0; i < weights.size(); ++i)
    check_slot(weights.data()[i], grads.weights.data()[i]);
  for (std::size_t i = 0; i < bias.size(); ++i) check_slot(bias[i], grads.bias[i]);
}

TEST_CASE("backward rejects a mis-shaped upstream gradient") {
  Rng rng(9);
  ConvSpec s;
  s.kh = s.kw = 3;
  s.pad_top = s.pad_bottom = s.pad_left = s.pad_right = 1;
  s.in_channels = 2;
  s.out_channels = 3;
  Tensor<float> input = random_tensor<float>(rng, 1, 2, 4, 4);
  Tensor<float> weights = random_tensor<float>(rng, 3, 2, 3, 3);
  Tensor<float> bad_grad(1, 3, 5, 4);
  CHECK_THROWS_AS(conv2d_backward(bad_grad, input, weights, s), ShapeError);
}

TEST_CASE("results agree across thread counts and repeat bitwise per count") {
  Rng rng(21);
  ConvSpec s;
  s.kh = s.kw = 3;
  s.pad_top = s.pad_bottom = s.pad_left = s.pad_right = 1;
  s.in_channels = 8;
  s.out_channels = 8;
  Tensor<float> input = random_tensor<float>(rng, 5, 8, 9, 9);
  Tensor<float> weights = random_tensor<float>(rng, 8, 8, 3, 3);
  Tensor<float> grad = random_tensor<float>(rng, 5, 8, 9, 9);

  set_thread_count(1);
  Tensor<float> out1 = conv2d_forward(input, weights, nullptr, s);
  ConvGrads<float> g1 = conv2d_backward(grad, input, weights, s);

  set_thread_count(3);
  Tensor<float> out3a = conv2d_forward(input, weights, nullptr, s);
  Tensor<float> out3b = conv2d_forward(input, weights, nullptr, s);
  ConvGrads<float> g3a = conv2d_backward(grad, input, weights, s);
  ConvGrads<float> g3b = conv2d_backward(grad, input, weights, s);
  set_thread_count(1);

  // Per-sample work makes the forward identical regardless of threading.
  for (std::size_t i = 0; i < out1.size(); ++i) CHECK(out1.data()[i] == out3a.data()[i]);

  // Weight reduction order is fixed for a given thread count, so repeats are
  // bitwise identical; across counts the sums only agree approximately.
  for (std::size_t i = 0; i < g3a.weights.size(); ++i)
    CHECK(g3a.weights.data()[i] == g3b.weights.data()[i]);
  for (std::size_t i = 0; i < g3a.bias.size(); ++i) CHECK(g3a.bias[i] == g3b.bias[i]);
  for (std::size_t i = 0; i < g1.weights.size(); ++i)
    CHECK(g1.weights.data()[i] == doctest::Approx(g3a.weights.data()[i]).epsilon(1e-4));
  for (std::size_t i = 0; i < g1.input.size(); ++i)
    CHECK(g1.input.data()[i] == g3a.input.data()[i]);
}
