#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "hexnet/conv2d.hpp"
#include "hexnet/error.hpp"
#include "hexnet/hexconv.hpp"
#include "hexnet/tensor.hpp"

namespace hexnet {

enum class Mode { Train, Eval };

// A named trainable tensor. backward() overwrites grad with the adjoint of
// the most recent forward; there is no cross-call accumulation.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool batchnorm = false;

  Param() = default;
  Param(std::string n, Tensor<T> v, bool bn = false)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()), batchnorm(bn) {}
};

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* value;
};

// ---------------------------------------------------------------------------
// Square convolution layer (no bias; normalization always follows it here).

template <typename T>
class Conv2dLayer {
public:
  Conv2dLayer(std::string name, ConvSpec spec) : name_(std::move(name)), spec_(spec) {
    Shape4 shape{spec_.out_channels, spec_.in_channels, spec_.kh, spec_.kw};
    weight_ = Param<T>(name_ + ".weight", Tensor<T>(shape));
  }

  void init(Rng& rng) {
    const std::size_t fan_in = spec_.in_channels * spec_.kh * spec_.kw;
    weight_.value = kaiming_init<T>(rng, weight_.value.shape(), fan_in);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (mode == Mode::Train) {
      input_ = x;
      has_cache_ = true;
    } else {
      has_cache_ = false;
    }
    return conv2d_forward(x, weight_.value, nullptr, spec_);
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!has_cache_) throw StateError(name_ + ": backward without a train-mode forward");
    ConvGrads<T> g = conv2d_backward(grad_out, input_, weight_.value, spec_);
    weight_.grad = std::move(g.weights);
    return std::move(g.input);
  }

  void collect(std::vector<Param<T>*>& out) { out.push_back(&weight_); }
  const ConvSpec& spec() const { return spec_; }
  Param<T>& weight() { return weight_; }
  std::size_t param_count() const { return weight_.value.size(); }

private:
  std::string name_;
  ConvSpec spec_;
  Param<T> weight_;
  Tensor<T> input_;
  bool has_cache_ = false;
};

// ---------------------------------------------------------------------------
// Hexagonal convolution layer. Two parameter tensors back one logical
// kernel; the side tensor's middle column stays structurally zero, so the
// trainable count is 7 per channel pair even though 9 scalars are stored.

template <typename T>
class HexConvLayer {
public:
  HexConvLayer(std::string name, std::size_t in_channels, std::size_t out_channels)
      : name_(std::move(name)), in_channels_(in_channels), out_channels_(out_channels) {
    side_ = Param<T>(name_ + ".side",
                     Tensor<T>(out_channels, in_channels, kSideKernelRows, kSideKernelCols));
    column_ = Param<T>(name_ + ".column",
                       Tensor<T>(out_channels, in_channels, kColumnKernelRows, 1));
  }

  // Seven incoming taps per input channel.
  void init(Rng& rng) {
    const std::size_t fan_in = kHexWeightCount * in_channels_;
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    HexKernel<T> k;
    k.side = Tensor<T>(side_.value.shape());
    k.column = Tensor<T>(column_.value.shape());
    for (std::size_t o = 0; o < out_channels_; ++o)
      for (std::size_t i = 0; i < in_channels_; ++i)
        for (int w = 0; w < kHexWeightCount; ++w)
          k.weight(static_cast<HexWeight>(w), o, i) = static_cast<T>(rng.normal(0.0, stddev));
    side_.value = std::move(k.side);
    column_.value = std::move(k.column);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (mode == Mode::Train) {
      input_ = x;
      has_cache_ = true;
    } else {
      has_cache_ = false;
    }
    return hexconv_forward(x, side_.value, column_.value, static_cast<const std::vector<T>*>(nullptr));
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!has_cache_) throw StateError(name_ + ": backward without a train-mode forward");
    HexConvGrads<T> g = hexconv_backward(grad_out, input_, side_.value, column_.value);
    side_.grad = std::move(g.side);
    column_.grad = std::move(g.column);
    return std::move(g.input);
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&side_);
    out.push_back(&column_);
  }
  std::size_t param_count() const { return kHexWeightCount * out_channels_ * in_channels_; }
  Param<T>& side() { return side_; }
  Param<T>& column() { return column_; }
  std::size_t in_channels() const { return in_channels_; }
  std::size_t out_channels() const { return out_channels_; }

private:
  std::string name_;
  std::size_t in_channels_, out_channels_;
  Param<T> side_, column_;
  Tensor<T> input_;
  bool has_cache_ = false;
};

// ---------------------------------------------------------------------------
// Batch normalization over (batch, row, column) per channel.

template <typename T>
class BatchNormLayer {
public:
  explicit BatchNormLayer(std::string name, std::size_t channels, double eps = 1e-5,
                          double momentum = 0.1)
      : name_(std::move(name)), channels_(channels), eps_(eps), momentum_(momentum) {
    gamma_ = Param<T>(name_ + ".gamma", Tensor<T>(1, channels, 1, 1, T(1)), true);
    beta_ = Param<T>(name_ + ".beta", Tensor<T>(1, channels, 1, 1, T(0)), true);
    running_mean_ = Tensor<T>(1, channels, 1, 1, T(0));
    running_var_ = Tensor<T>(1, channels, 1, 1, T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (x.c() != channels_) {
      throw ShapeError(name_ + ": input has " + std::to_string(x.c()) + " channels, expected " +
                       std::to_string(channels_));
    }
    if (mode == Mode::Eval) {
      has_cache_ = false;
      Tensor<T> out(x.shape());
      for (std::size_t c = 0; c < channels_; ++c) {
        const T g = gamma_.value.data()[c];
        const T b = beta_.value.data()[c];
        const T m = running_mean_.data()[c];
        const T istd = T(1) / std::sqrt(running_var_.data()[c] + static_cast<T>(eps_));
        for (std::size_t n = 0; n < x.n(); ++n) {
          const T* src = x.plane_data(n, c);
          T* dst = out.plane_data(n, c);
          for (std::size_t i = 0; i < x.plane(); ++i) dst[i] = (src[i] - m) * istd * g + b;
        }
      }
      return out;
    }

    const std::size_t count = x.n() * x.plane();
    if (count < 2) {
      throw ShapeError(name_ + ": train-mode batch statistics need at least 2 values per channel");
    }
    input_ = x;
    mean_ = Tensor<T>(1, channels_, 1, 1);
    inv_std_ = Tensor<T>(1, channels_, 1, 1);
    xhat_ = Tensor<T>(x.shape());
    Tensor<T> out(x.shape());
    for (std::size_t c = 0; c < channels_; ++c) {
      double sum = 0.0;
      for (std::size_t n = 0; n < x.n(); ++n) {
        const T* src = x.plane_data(n, c);
        for (std::size_t i = 0; i < x.plane(); ++i) sum += src[i];
      }
      const double mean = sum / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t n = 0; n < x.n(); ++n) {
        const T* src = x.plane_data(n, c);
        for (std::size_t i = 0; i < x.plane(); ++i) {
          const double d = src[i] - mean;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(count);
      const double istd = 1.0 / std::sqrt(var + eps_);
      mean_.data()[c] = static_cast<T>(mean);
      inv_std_.data()[c] = static_cast<T>(istd);

      const T g = gamma_.value.data()[c];
      const T b = beta_.value.data()[c];
      for (std::size_t n = 0; n < x.n(); ++n) {
        const T* src = x.plane_data(n, c);
        T* xh = xhat_.plane_data(n, c);
        T* dst = out.plane_data(n, c);
        for (std::size_t i = 0; i < x.plane(); ++i) {
          const T h = static_cast<T>((src[i] - mean) * istd);
          xh[i] = h;
          dst[i] = h * g + b;
        }
      }

      // Running statistics track the unbiased variance estimate.
      const double unbiased = sq / static_cast<double>(count - 1);
      running_mean_.data()[c] =
          static_cast<T>((1.0 - momentum_) * running_mean_.data()[c] + momentum_ * mean);
      running_var_.data()[c] =
          static_cast<T>((1.0 - momentum_) * running_var_.data()[c] + momentum_ * unbiased);
    }
    has_cache_ = true;
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!has_cache_) throw StateError(name_ + ": backward without a train-mode forward");
    require_same_shape(grad_out, input_, name_.c_str());
    const std::size_t count = input_.n() * input_.plane();
    Tensor<T> grad_in(input_.shape());
    for (std::size_t c = 0; c < channels_; ++c) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t n = 0; n < input_.n(); ++n) {
        const T* dy = grad_out.plane_data(n, c);
        const T* xh = xhat_.plane_data(n, c);
        for (std::size_t i = 0; i < input_.plane(); ++i) {
          sum_dy += dy[i];
          sum_dy_xhat += static_cast<double>(dy[i]) * xh[i];
        }
      }
      gamma_.grad.data()[c] = static_cast<T>(sum_dy_xhat);
      beta_.grad.data()[c] = static_cast<T>(sum_dy);

      const double g = gamma_.value.data()[c];
      const double istd = inv_std_.data()[c];
      const double scale = g * istd / static_cast<double>(count);
      for (std::size_t n = 0; n < input_.n(); ++n) {
        const T* dy = grad_out.plane_data(n, c);
        const T* xh = xhat_.plane_data(n, c);
        T* dx = grad_in.plane_data(n, c);
        for (std::size_t i = 0; i < input_.plane(); ++i) {
          dx[i] = static_cast<T>(scale * (static_cast<double>(count) * dy[i] - sum_dy -
                                          static_cast<double>(xh[i]) * sum_dy_xhat));
        }
      }
    }
    return grad_in;
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }
  void collect_buffers(std::vector<NamedTensor<T>>& out) {
    out.push_back({name_ + ".running_mean", &running_mean_});
    out.push_back({name_ + ".running_var", &running_var_});
  }
  std::size_t param_count() const { return 2 * channels_; }
  Param<T>& gamma() { return gamma_; }
  Param<T>& beta() { return beta_; }
  Tensor<T>& running_mean() { return running_mean_; }
  Tensor<T>& running_var() { return running_var_; }

private:
  std::string name_;
  std::size_t channels_;
  double eps_, momentum_;
  Param<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
  Tensor<T> input_, mean_, inv_std_, xhat_;
  bool has_cache_ = false;
};

// ---------------------------------------------------------------------------
// Stateless pieces. Callers keep whatever activations the adjoints need.

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  const T* src = x.data();
  T* dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = src[i] > T(0) ? src[i] : T(0);
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& pre_activation) {
  require_same_shape(grad_out, pre_activation, "relu_backward");
  Tensor<T> out(grad_out.shape());
  const T* g = grad_out.data();
  const T* x = pre_activation.data();
  T* dst = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) dst[i] = x[i] > T(0) ? g[i] : T(0);
  return out;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  Tensor<T> out(x.n(), x.c(), 1, 1);
  const T scale = T(1) / static_cast<T>(x.plane());
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t c = 0; c < x.c(); ++c) {
      const T* src = x.plane_data(n, c);
      T acc = 0;
      for (std::size_t i = 0; i < x.plane(); ++i) acc += src[i];
      out(n, c, 0, 0) = acc * scale;
    }
  return out;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& grad_out, std::size_t h, std::size_t w) {
  Tensor<T> out(grad_out.n(), grad_out.c(), h, w);
  const T scale = T(1) / static_cast<T>(h * w);
  for (std::size_t n = 0; n < out.n(); ++n)
    for (std::size_t c = 0; c < out.c(); ++c) {
      const T v = grad_out(n, c, 0, 0) * scale;
      T* dst = out.plane_data(n, c);
      for (std::size_t i = 0; i < h * w; ++i) dst[i] = v;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Fully connected classifier head over (batch, features, 1, 1) activations.

template <typename T>
class LinearLayer {
public:
  LinearLayer(std::string name, std::size_t in_features, std::size_t out_features)
      : name_(std::move(name)), in_(in_features), out_(out_features) {
    weight_ = Param<T>(name_ + ".weight", Tensor<T>(out_features, in_features, 1, 1));
    bias_ = Param<T>(name_ + ".bias", Tensor<T>(1, out_features, 1, 1));
  }

  void init(Rng& rng) { weight_.value = kaiming_init<T>(rng, weight_.value.shape(), in_); }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (x.c() != in_ || x.h() != 1 || x.w() != 1) {
      throw ShapeError(name_ + ": expected pooled input with " + std::to_string(in_) +
                       " features, got " + shape_string(x.shape()));
    }
    if (mode == Mode::Train) {
      input_ = x;
      has_cache_ = true;
    } else {
      has_cache_ = false;
    }
    Tensor<T> out(x.n(), out_, 1, 1);
    for (std::size_t n = 0; n < x.n(); ++n) {
      const T* src = x.sample_data(n);
      T* dst = out.sample_data(n);
      for (std::size_t k = 0; k < out_; ++k) {
        const T* wrow = weight_.value.data() + k * in_;
        T acc = bias_.value.data()[k];
        for (std::size_t c = 0; c < in_; ++c) acc += wrow[c] * src[c];
        dst[k] = acc;
      }
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!has_cache_) throw StateError(name_ + ": backward without a train-mode forward");
    Tensor<T> grad_in(input_.shape());
    weight_.grad.fill(T(0));
    bias_.grad.fill(T(0));
    for (std::size_t n = 0; n < input_.n(); ++n) {
      const T* x = input_.sample_data(n);
      const T* dy = grad_out.sample_data(n);
      T* dx = grad_in.sample_data(n);
      for (std::size_t k = 0; k < out_; ++k) {
        const T g = dy[k];
        bias_.grad.data()[k] += g;
        T* wg = weight_.grad.data() + k * in_;
        const T* wrow = weight_.value.data() + k * in_;
        for (std::size_t c = 0; c < in_; ++c) {
          wg[c] += g * x[c];
          dx[c] += g * wrow[c];
        }
      }
    }
    return grad_in;
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }
  std::size_t param_count() const { return out_ * in_ + out_; }
  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

private:
  std::string name_;
  std::size_t in_, out_;
  Param<T> weight_, bias_;
  Tensor<T> input_;
  bool has_cache_ = false;
};

// ---------------------------------------------------------------------------
// Mean softmax cross-entropy over the batch, with the gradient with respect
// to the logits. Stabilised by the row max before exponentiation.

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad_logits;
};

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels) {
  if (logits.h() != 1 || logits.w() != 1) {
    throw ShapeError("softmax_cross_entropy: logits must be (batch, classes, 1, 1), got " +
                     shape_string(logits.shape()));
  }
  if (labels.size() != logits.n()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for batch of " + std::to_string(logits.n()));
  }
  const std::size_t classes = logits.c();
  LossResult<T> result;
  result.grad_logits = Tensor<T>(logits.shape());
  const T inv_batch = T(1) / static_cast<T>(logits.n());
  double total = 0.0;
  for (std::size_t n = 0; n < logits.n(); ++n) {
    const int label = labels[n];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw ShapeError("softmax_cross_entropy: label " + std::to_string(label) +
                       " outside [0, " + std::to_string(classes) + ")");
    }
    const T* z = logits.sample_data(n);
    T zmax = z[0];
    for (std::size_t k = 1; k < classes; ++k) zmax = std::max(zmax, z[k]);
    double denom = 0.0;
    for (std::size_t k = 0; k < classes; ++k) denom += std::exp(static_cast<double>(z[k] - zmax));
    const double log_denom = std::log(denom);
    total += log_denom - static_cast<double>(z[label] - zmax);
    T* g = result.grad_logits.sample_data(n);
    for (std::size_t k = 0; k < classes; ++k) {
      const double p = std::exp(static_cast<double>(z[k] - zmax)) / denom;
      g[k] = static_cast<T>(p) * inv_batch;
    }
    g[label] -= inv_batch;
  }
  result.loss = total / static_cast<double>(logits.n());
  return result;
}

// ---------------------------------------------------------------------------
// SGD with classical momentum and decoupled-switchable weight decay on the
// normalization parameters:
//   v <- mu * v + (g + lambda * w)
//   w <- w - lr * v
// Velocities are zero-initialised and keyed by parameter order, which is
// stable for a given model.

template <typename T>
struct SgdConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  bool decay_on_batchnorm = true;
};

template <typename T>
class Sgd {
public:
  explicit Sgd(SgdConfig<T> config) : config_(config) {}

  void step(const std::vector<Param<T>*>& params, double learning_rate) {
    if (velocities_.empty()) {
      velocities_.reserve(params.size());
      for (const Param<T>* p : params) velocities_.emplace_back(p->value.shape());
    }
    if (velocities_.size() != params.size()) {
      throw StateError("sgd: parameter list changed size between steps");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      Param<T>& p = *params[i];
      Tensor<T>& v = velocities_[i];
      if (!v.same_shape(p.value)) throw StateError("sgd: parameter shape changed: " + p.name);
      const T mu = static_cast<T>(config_.momentum);
      const T lambda =
          (p.batchnorm && !config_.decay_on_batchnorm) ? T(0) : static_cast<T>(config_.weight_decay);
      const T lr = static_cast<T>(learning_rate);
      T* w = p.value.data();
      const T* g = p.grad.data();
      T* vel = v.data();
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        vel[j] = mu * vel[j] + (g[j] + lambda * w[j]);
        w[j] -= lr * vel[j];
      }
    }
  }

  const SgdConfig<T>& config() const { return config_; }
  std::vector<Tensor<T>>& velocities() { return velocities_; }

private:
  SgdConfig<T> config_;
  std::vector<Tensor<T>> velocities_;
};

}  // namespace hexnet
