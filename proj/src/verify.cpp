#include "hexnet/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "hexnet/gradcheck.hpp"
#include "hexnet/hexconv.hpp"
#include "hexnet/layers.hpp"
#include "hexnet/resnet.hpp"
#include "hexnet/rng.hpp"

namespace hexnet {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
Tensor<T> random_tensor(Rng& rng, const Shape4& shape, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i)
    t.data()[i] = static_cast<T>(lo + (hi - lo) * rng.uniform());
  return t;
}

template <typename T>
HexKernel<T> random_hex_kernel(Rng& rng, std::size_t out_ch, std::size_t in_ch) {
  HexKernel<T> k(out_ch, in_ch);
  for (std::size_t o = 0; o < out_ch; ++o)
    for (std::size_t i = 0; i < in_ch; ++i)
      for (int w = 0; w < kHexWeightCount; ++w)
        k.weight(static_cast<HexWeight>(w), o, i) = static_cast<T>(2.0 * rng.uniform() - 1.0);
  return k;
}

}  // namespace

OracleSweepResult hexconv_oracle_sweep(std::size_t cases, std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(seed);
  constexpr std::size_t kChannels[] = {1, 3, 16};
  constexpr std::size_t kBatches[] = {1, 4};

  OracleSweepResult result;
  result.cases = cases;
  for (std::size_t k = 0; k < cases; ++k) {
    const std::size_t h = 1 + rng.uniform_index(9);
    const std::size_t w = 1 + rng.uniform_index(9);
    const std::size_t in_ch = kChannels[rng.uniform_index(3)];
    const std::size_t out_ch = kChannels[rng.uniform_index(3)];
    const std::size_t n = kBatches[rng.uniform_index(2)];

    Tensor<float> input = random_tensor<float>(rng, {n, in_ch, h, w});
    HexKernel<float> kernel = random_hex_kernel<float>(rng, out_ch, in_ch);
    std::vector<float> bias(out_ch);
    for (auto& b : bias) b = static_cast<float>(2.0 * rng.uniform() - 1.0);

    Tensor<float> fast = hexconv_forward(input, kernel.side, kernel.column, &bias);
    Tensor<float> ref = hexconv_forward_reference(input, kernel.side, kernel.column, &bias);
    require_same_shape(fast, ref, "oracle sweep");
    for (std::size_t i = 0; i < fast.size(); ++i) {
      const double dev = std::abs(static_cast<double>(fast.data()[i]) - ref.data()[i]);
      result.max_abs_deviation = std::max(result.max_abs_deviation, dev);
    }
  }
  result.seconds = seconds_since(start);
  return result;
}

namespace {

GradCheckLine check_conv2d(Rng& rng) {
  ConvSpec spec;
  spec.kh = 3;
  spec.kw = 3;
  spec.stride_h = 2;
  spec.stride_w = 1;
  spec.pad_top = 1;
  spec.pad_bottom = 0;
  spec.pad_left = 2;
  spec.pad_right = 1;
  spec.dilation_h = 1;
  spec.dilation_w = 2;
  spec.in_channels = 3;
  spec.out_channels = 4;

  Tensor<double> input = random_tensor<double>(rng, {2, 3, 5, 6});
  Tensor<double> weights = random_tensor<double>(rng, {4, 3, 3, 3});
  std::vector<double> bias(4);
  for (auto& b : bias) b = 2.0 * rng.uniform() - 1.0;

  Tensor<double> out = conv2d_forward(input, weights, &bias, spec);
  Tensor<double> probe = make_probe(rng, out.shape());
  auto eval = [&] { return probe_loss(conv2d_forward(input, weights, &bias, spec), probe); };

  ConvGrads<double> grads = conv2d_backward(probe, input, weights, spec);
  GradCheckStats stats;
  check_all_coords(input, grads.input, eval, stats);
  check_all_coords(weights, grads.weights, eval, stats);
  for (std::size_t o = 0; o < bias.size(); ++o) {
    const double numeric = fd_partial(bias[o], eval);
    stats.update(grads.bias[o], numeric);
  }
  return {"conv2d", stats.max_rel_error, stats.coords, false};
}

GradCheckLine check_hexconv(Rng& rng) {
  const std::size_t in_ch = 3, out_ch = 4;
  Tensor<double> input = random_tensor<double>(rng, {2, in_ch, 5, 5});
  HexKernel<double> kernel = random_hex_kernel<double>(rng, out_ch, in_ch);
  std::vector<double> bias(out_ch);
  for (auto& b : bias) b = 2.0 * rng.uniform() - 1.0;

  Tensor<double> out = hexconv_forward(input, kernel.side, kernel.column, &bias);
  Tensor<double> probe = make_probe(rng, out.shape());
  auto eval = [&] {
    return probe_loss(hexconv_forward(input, kernel.side, kernel.column, &bias), probe);
  };

  HexConvGrads<double> grads = hexconv_backward(probe, input, kernel.side, kernel.column);
  GradCheckStats stats;
  check_all_coords(input, grads.input, eval, stats);
  // Only the seven live slots per pair are parameters; the structurally zero
  // middle column of the side tensor is pinned and stays out of the check.
  for (std::size_t o = 0; o < out_ch; ++o)
    for (std::size_t i = 0; i < in_ch; ++i)
      for (int w = 0; w < kHexWeightCount; ++w) {
        const auto hw = static_cast<HexWeight>(w);
        double* slot;
        double analytic;
        if (is_side_weight(hw)) {
          const SideSlot s = side_kernel_slot(hw);
          slot = &kernel.side(o, i, s.row, s.col);
          analytic = grads.side(o, i, s.row, s.col);
        } else {
          slot = &kernel.column(o, i, column_kernel_row(hw), 0);
          analytic = grads.column(o, i, column_kernel_row(hw), 0);
        }
        stats.update(analytic, fd_partial(*slot, eval));
      }
  for (std::size_t o = 0; o < out_ch; ++o) {
    stats.update(grads.bias[o], fd_partial(bias[o], eval));
  }
  return {"hexconv", stats.max_rel_error, stats.coords, false};
}

GradCheckLine check_batchnorm(Rng& rng) {
  BatchNormLayer<double> bn("bn", 4);
  Tensor<double> input = random_tensor<double>(rng, {3, 4, 2, 3});
  Tensor<double> out = bn.forward(input, Mode::Train);
  Tensor<double> probe = make_probe(rng, out.shape());
  auto eval = [&] { return probe_loss(bn.forward(input, Mode::Train), probe); };

  bn.forward(input, Mode::Train);
  Tensor<double> grad_in = bn.backward(probe);
  Tensor<double> gamma_grad = bn.gamma().grad;
  Tensor<double> beta_grad = bn.beta().grad;

  GradCheckStats stats;
  check_all_coords(input, grad_in, eval, stats);
  check_all_coords(bn.gamma().value, gamma_grad, eval, stats);
  check_all_coords(bn.beta().value, beta_grad, eval, stats);
  return {"batchnorm", stats.max_rel_error, stats.coords, false};
}

GradCheckLine check_relu(Rng& rng) {
  Tensor<double> input(2, 3, 4, 4);
  for (std::size_t i = 0; i < input.size(); ++i) {
    // Keep every value away from the kink.
    const double u = 2.0 * rng.uniform() - 1.0;
    input.data()[i] = u + (u >= 0 ? 0.25 : -0.25);
  }
  Tensor<double> probe = make_probe(rng, input.shape());
  auto eval = [&] { return probe_loss(relu(input), probe); };
  Tensor<double> analytic = relu_backward(probe, input);
  GradCheckStats stats;
  check_all_coords(input, analytic, eval, stats);
  return {"relu", stats.max_rel_error, stats.coords, false};
}

GradCheckLine check_global_avg_pool(Rng& rng) {
  Tensor<double> input = random_tensor<double>(rng, {2, 3, 4, 5});
  Tensor<double> probe = make_probe(rng, {2, 3, 1, 1});
  auto eval = [&] { return probe_loss(global_avg_pool(input), probe); };
  Tensor<double> analytic = global_avg_pool_backward(probe, 4, 5);
  GradCheckStats stats;
  check_all_coords(input, analytic, eval, stats);
  return {"global_avg_pool", stats.max_rel_error, stats.coords, false};
}

GradCheckLine check_linear(Rng& rng) {
  LinearLayer<double> fc("fc", 6, 5);
  fc.init(rng);
  Tensor<double> input = random_tensor<double>(rng, {3, 6, 1, 1});
  Tensor<double> out = fc.forward(input, Mode::Train);
  Tensor<double> probe = make_probe(rng, out.shape());
  auto eval = [&] { return probe_loss(fc.forward(input, Mode::Train), probe); };

  fc.forward(input, Mode::Train);
  Tensor<double> grad_in = fc.backward(probe);
  Tensor<double> w_grad = fc.weight().grad;
  Tensor<double> b_grad = fc.bias().grad;

  GradCheckStats stats;
  check_all_coords(input, grad_in, eval, stats);
  check_all_coords(fc.weight().value, w_grad, eval, stats);
  check_all_coords(fc.bias().value, b_grad, eval, stats);
  return {"linear", stats.max_rel_error, stats.coords, false};
}

GradCheckLine check_softmax_cross_entropy(Rng& rng) {
  Tensor<double> logits = random_tensor<double>(rng, {4, 10, 1, 1}, -2.0, 2.0);
  std::vector<int> labels(4);
  for (auto& l : labels) l = static_cast<int>(rng.uniform_index(10));
  auto eval = [&] { return softmax_cross_entropy(logits, labels).loss; };
  LossResult<double> res = softmax_cross_entropy(logits, labels);
  GradCheckStats stats;
  check_all_coords(logits, res.grad_logits, eval, stats);
  return {"softmax_cross_entropy", stats.max_rel_error, stats.coords, false};
}

GradCheckLine check_model(Rng& rng) {
  ArchConfig config;
  config.depth = 20;
  config.shortcut = ShortcutMode::HexProjection;
  ResNet<double> model(config, /*blocks_per_stage_limit=*/1);
  Rng init_rng(rng.next_u64());
  model.init(init_rng);

  Tensor<double> input = random_tensor<double>(rng, {2, 3, 32, 32});
  std::vector<int> labels = {static_cast<int>(rng.uniform_index(10)),
                             static_cast<int>(rng.uniform_index(10))};
  auto eval = [&] {
    return softmax_cross_entropy(model.forward(input, Mode::Train), labels).loss;
  };

  LossResult<double> res = softmax_cross_entropy(model.forward(input, Mode::Train), labels);
  Tensor<double> grad_in = model.backward(res.grad_logits);

  GradCheckStats stats;
  check_sampled_coords(input, grad_in, eval, rng, 40, stats);
  for (Param<double>* p : model.parameters()) {
    // Analytic gradients were already taken; perturbing values re-runs the
    // whole net. Structural zeros carry zero analytic gradient and are never
    // perturbed because sampling maps hex side tensors through live slots.
    if (p->name.find(".side") != std::string::npos) {
      for (std::size_t s = 0; s < 6; ++s) {
        const std::size_t o = rng.uniform_index(p->value.shape()[0]);
        const std::size_t i = rng.uniform_index(p->value.shape()[1]);
        const auto weights = std::array<HexWeight, 4>{HexWeight::TopLeft, HexWeight::BottomLeft,
                                                      HexWeight::TopRight, HexWeight::BottomRight};
        const SideSlot slot = side_kernel_slot(weights[rng.uniform_index(4)]);
        const double analytic = p->grad(o, i, slot.row, slot.col);
        const double numeric = fd_partial(p->value(o, i, slot.row, slot.col), eval);
        stats.update(analytic, numeric);
      }
    } else {
      check_sampled_coords(p->value, p->grad, eval, rng, 6, stats);
    }
  }
  return {"hex_resnet_1_block_per_stage", stats.max_rel_error, stats.coords, true};
}

}  // namespace

GradCheckReport run_gradcheck(std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(seed);
  GradCheckReport report;
  report.lines.push_back(check_conv2d(rng));
  report.lines.push_back(check_hexconv(rng));
  report.lines.push_back(check_batchnorm(rng));
  report.lines.push_back(check_relu(rng));
  report.lines.push_back(check_global_avg_pool(rng));
  report.lines.push_back(check_linear(rng));
  report.lines.push_back(check_softmax_cross_entropy(rng));
  report.lines.push_back(check_model(rng));
  for (const GradCheckLine& line : report.lines) {
    if (line.whole_model) {
      report.worst_model = std::max(report.worst_model, line.max_rel_error);
    } else {
      report.worst_layer = std::max(report.worst_layer, line.max_rel_error);
    }
  }
  report.seconds = seconds_since(start);
  return report;
}

BenchResult bench_hex_vs_square(std::size_t in_channels, std::size_t out_channels,
                                std::size_t spatial, std::size_t repeats,
                                std::uint64_t seed) {
  if (in_channels == 0 || out_channels == 0) {
    throw ShapeError("bench: channel counts must be positive");
  }
  if (spatial == 0 || repeats == 0) {
    throw ShapeError("bench: spatial extent and repeats must be positive");
  }
  Rng rng(seed);
  const std::size_t batch = 4;
  Tensor<float> input = random_tensor<float>(rng, {batch, in_channels, spatial, spatial});
  HexKernel<float> kernel = random_hex_kernel<float>(rng, out_channels, in_channels);
  Tensor<float> square = random_tensor<float>(rng, {out_channels, in_channels, 3, 3});
  ConvSpec spec;
  spec.kh = spec.kw = 3;
  spec.pad_top = spec.pad_bottom = spec.pad_left = spec.pad_right = 1;
  spec.in_channels = in_channels;
  spec.out_channels = out_channels;

  // One untimed pass each warms scratch buffers and caches.
  volatile float sink = 0;
  sink = sink + hexconv_forward(input, kernel.side, kernel.column, nullptr).data()[0];
  sink = sink + conv2d_forward(input, square, nullptr, spec).data()[0];

  std::vector<double> hex_ms(repeats), square_ms(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    auto t0 = Clock::now();
    Tensor<float> h = hexconv_forward(input, kernel.side, kernel.column, nullptr);
    hex_ms[r] = seconds_since(t0) * 1e3;
    sink = sink + h.data()[0];

    t0 = Clock::now();
    Tensor<float> q = conv2d_forward(input, square, nullptr, spec);
    square_ms[r] = seconds_since(t0) * 1e3;
    sink = sink + q.data()[0];
  }
  (void)sink;

  auto summarize = [](std::vector<double> v, double& median, double& lo, double& hi) {
    std::sort(v.begin(), v.end());
    lo = v.front();
    hi = v.back();
    median = v[v.size() / 2];
  };
  BenchResult result;
  result.repeats = repeats;
  summarize(hex_ms, result.hex_median_ms, result.hex_min_ms, result.hex_max_ms);
  summarize(square_ms, result.square_median_ms, result.square_min_ms, result.square_max_ms);
  result.ratio = result.hex_median_ms / result.square_median_ms;
  return result;
}

}  // namespace hexnet
