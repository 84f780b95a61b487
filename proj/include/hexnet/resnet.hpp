#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "hexnet/layers.hpp"

namespace hexnet {

// What a dimension-changing block does on its skip path. Blocks that keep
// the shape always use a plain identity regardless of this mode.
enum class ShortcutMode { IdentityPad, Projection1x1, HexProjection };

inline std::string to_string(ShortcutMode m) {
  switch (m) {
    case ShortcutMode::IdentityPad: return "identity_pad";
    case ShortcutMode::Projection1x1: return "projection_1x1";
    case ShortcutMode::HexProjection: return "hex_projection";
  }
  throw std::invalid_argument("unknown shortcut mode");
}

inline ShortcutMode shortcut_mode_from_string(const std::string& s) {
  if (s == "identity_pad") return ShortcutMode::IdentityPad;
  if (s == "projection_1x1") return ShortcutMode::Projection1x1;
  if (s == "hex_projection") return ShortcutMode::HexProjection;
  throw std::invalid_argument("unknown shortcut mode: " + s +
                              " (expected identity_pad, projection_1x1 or hex_projection)");
}

struct ArchConfig {
  int depth = 20;
  ShortcutMode shortcut = ShortcutMode::IdentityPad;
  std::size_t num_classes = 10;

  static constexpr std::array<std::size_t, 3> kStageWidths{16, 32, 64};

  std::size_t blocks_per_stage() const {
    validate();
    return static_cast<std::size_t>((depth - 2) / 6);
  }

  void validate() const {
    if (depth != 20 && depth != 32 && depth != 44 && depth != 56) {
      throw std::invalid_argument("invalid depth " + std::to_string(depth) +
                                  " (supported: 20, 32, 44, 56)");
    }
    if (num_classes < 2) {
      throw std::invalid_argument("num_classes must be at least 2");
    }
  }
};

namespace detail {

inline ConvSpec conv3x3_spec(std::size_t in_ch, std::size_t out_ch, std::size_t stride) {
  ConvSpec s;
  s.kh = s.kw = 3;
  s.stride_h = s.stride_w = stride;
  s.pad_top = s.pad_bottom = s.pad_left = s.pad_right = 1;
  s.in_channels = in_ch;
  s.out_channels = out_ch;
  return s;
}

inline ConvSpec conv1x1_spec(std::size_t in_ch, std::size_t out_ch, std::size_t stride) {
  ConvSpec s;
  s.kh = s.kw = 1;
  s.stride_h = s.stride_w = stride;
  s.in_channels = in_ch;
  s.out_channels = out_ch;
  return s;
}

}  // namespace detail

// Two 3x3 convolutions with batch norm, a skip connection and a final ReLU.
// When the block changes width or resolution the skip path is the configured
// shortcut; otherwise it is the identity.
template <typename T>
class ResidualBlock {
public:
  ResidualBlock(const std::string& name, std::size_t in_ch, std::size_t out_ch,
                std::size_t stride, ShortcutMode mode)
      : name_(name),
        in_ch_(in_ch),
        out_ch_(out_ch),
        stride_(stride),
        conv1_(name + ".conv1", detail::conv3x3_spec(in_ch, out_ch, stride)),
        bn1_(name + ".bn1", out_ch),
        conv2_(name + ".conv2", detail::conv3x3_spec(out_ch, out_ch, 1)),
        bn2_(name + ".bn2", out_ch) {
    const bool transition = stride != 1 || in_ch != out_ch;
    if (transition) {
      switch (mode) {
        case ShortcutMode::IdentityPad:
          shortcut_ = Shortcut::Pad;
          break;
        case ShortcutMode::Projection1x1:
          shortcut_ = Shortcut::Projection;
          proj_conv_ = std::make_unique<Conv2dLayer<T>>(
              name + ".shortcut.conv", detail::conv1x1_spec(in_ch, out_ch, stride));
          proj_bn_ = std::make_unique<BatchNormLayer<T>>(name + ".shortcut.bn", out_ch);
          break;
        case ShortcutMode::HexProjection:
          shortcut_ = Shortcut::Hex;
          hex_ = std::make_unique<HexConvLayer<T>>(name + ".shortcut.hex", in_ch, out_ch);
          proj_bn_ = std::make_unique<BatchNormLayer<T>>(name + ".shortcut.bn", out_ch);
          break;
      }
    }
  }

  void init(Rng& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    if (proj_conv_) proj_conv_->init(rng);
    if (hex_) hex_->init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (mode == Mode::Train) {
      in_h_ = x.h();
      in_w_ = x.w();
    }
    Tensor<T> y = conv1_.forward(x, mode);
    y = bn1_.forward(y, mode);
    if (mode == Mode::Train) pre_relu1_ = y;
    y = relu(y);
    y = conv2_.forward(y, mode);
    y = bn2_.forward(y, mode);

    Tensor<T> skip = shortcut_forward(x, mode);
    add_inplace(y, skip);
    if (mode == Mode::Train) {
      pre_relu_out_ = y;
      has_cache_ = true;
    } else {
      has_cache_ = false;
    }
    return relu(y);
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!has_cache_) throw StateError(name_ + ": backward without a train-mode forward");
    Tensor<T> g = relu_backward(grad_out, pre_relu_out_);
    Tensor<T> grad_in = shortcut_backward(g);
    Tensor<T> gm = bn2_.backward(g);
    gm = conv2_.backward(gm);
    gm = relu_backward(gm, pre_relu1_);
    gm = bn1_.backward(gm);
    gm = conv1_.backward(gm);
    add_inplace(grad_in, gm);
    return grad_in;
  }

  void collect(std::vector<Param<T>*>& out) {
    conv1_.collect(out);
    bn1_.collect(out);
    conv2_.collect(out);
    bn2_.collect(out);
    if (proj_conv_) proj_conv_->collect(out);
    if (hex_) hex_->collect(out);
    if (proj_bn_) proj_bn_->collect(out);
  }

  void collect_buffers(std::vector<NamedTensor<T>>& out) {
    bn1_.collect_buffers(out);
    bn2_.collect_buffers(out);
    if (proj_bn_) proj_bn_->collect_buffers(out);
  }

  std::size_t param_count() const {
    std::size_t total = conv1_.param_count() + bn1_.param_count() + conv2_.param_count() +
                        bn2_.param_count();
    if (proj_conv_) total += proj_conv_->param_count();
    if (hex_) total += hex_->param_count();
    if (proj_bn_) total += proj_bn_->param_count();
    return total;
  }

  bool has_hex() const { return hex_ != nullptr; }

private:
  enum class Shortcut { Identity, Pad, Projection, Hex };

  Tensor<T> shortcut_forward(const Tensor<T>& x, Mode mode) {
    switch (shortcut_) {
      case Shortcut::Identity:
        return x;
      case Shortcut::Pad: {
        // Parameter-free: drop odd grid positions, append zero channels.
        Tensor<T> sub = stride_ == 1 ? x : subsample2(x);
        Tensor<T> out(sub.n(), out_ch_, sub.h(), sub.w());
        for (std::size_t n = 0; n < sub.n(); ++n)
          for (std::size_t c = 0; c < in_ch_; ++c)
            std::memcpy(out.plane_data(n, c), sub.plane_data(n, c), sub.plane() * sizeof(T));
        return out;
      }
      case Shortcut::Projection: {
        Tensor<T> y = proj_conv_->forward(x, mode);
        return proj_bn_->forward(y, mode);
      }
      case Shortcut::Hex: {
        // Full-resolution hexagonal pass, then the grid is halved.
        Tensor<T> y = hex_->forward(x, mode);
        if (stride_ != 1) y = subsample2(y);
        return proj_bn_->forward(y, mode);
      }
    }
    throw StateError(name_ + ": unknown shortcut kind");
  }

  Tensor<T> shortcut_backward(const Tensor<T>& grad) {
    switch (shortcut_) {
      case Shortcut::Identity:
        return grad;
      case Shortcut::Pad: {
        Tensor<T> trimmed(grad.n(), in_ch_, grad.h(), grad.w());
        for (std::size_t n = 0; n < grad.n(); ++n)
          for (std::size_t c = 0; c < in_ch_; ++c)
            std::memcpy(trimmed.plane_data(n, c), grad.plane_data(n, c),
                        grad.plane() * sizeof(T));
        return stride_ == 1 ? trimmed : subsample2_backward(trimmed, in_h_, in_w_);
      }
      case Shortcut::Projection: {
        Tensor<T> g = proj_bn_->backward(grad);
        return proj_conv_->backward(g);
      }
      case Shortcut::Hex: {
        Tensor<T> g = proj_bn_->backward(grad);
        if (stride_ != 1) g = subsample2_backward(g, in_h_, in_w_);
        return hex_->backward(g);
      }
    }
    throw StateError(name_ + ": unknown shortcut kind");
  }

  std::string name_;
  std::size_t in_ch_, out_ch_, stride_;
  Conv2dLayer<T> conv1_;
  BatchNormLayer<T> bn1_;
  Conv2dLayer<T> conv2_;
  BatchNormLayer<T> bn2_;
  Shortcut shortcut_ = Shortcut::Identity;
  std::unique_ptr<Conv2dLayer<T>> proj_conv_;
  std::unique_ptr<HexConvLayer<T>> hex_;
  std::unique_ptr<BatchNormLayer<T>> proj_bn_;
  Tensor<T> pre_relu1_, pre_relu_out_;
  std::size_t in_h_ = 0, in_w_ = 0;
  bool has_cache_ = false;
};

// CIFAR-style residual network: a 3x3 stem into three stages of equal block
// count at widths 16/32/64, global average pooling and a linear classifier.
// blocks_per_stage_limit caps the stage length (0 means the full depth);
// gradient checking uses a one-block-per-stage truncation.
template <typename T>
class ResNet {
public:
  explicit ResNet(const ArchConfig& config, std::size_t blocks_per_stage_limit = 0)
      : config_(config),
        stem_conv_("stem.conv", detail::conv3x3_spec(3, ArchConfig::kStageWidths[0], 1)),
        stem_bn_("stem.bn", ArchConfig::kStageWidths[0]),
        head_("head.fc", ArchConfig::kStageWidths[2], config.num_classes) {
    config_.validate();
    std::size_t n = config_.blocks_per_stage();
    if (blocks_per_stage_limit > 0 && blocks_per_stage_limit < n) n = blocks_per_stage_limit;
    blocks_per_stage_ = n;

    std::size_t in_ch = ArchConfig::kStageWidths[0];
    for (std::size_t stage = 0; stage < 3; ++stage) {
      const std::size_t width = ArchConfig::kStageWidths[stage];
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t stride = (stage > 0 && b == 0) ? 2 : 1;
        const std::string name =
            "stage" + std::to_string(stage + 1) + ".block" + std::to_string(b);
        blocks_.push_back(std::make_unique<ResidualBlock<T>>(name, in_ch, width, stride,
                                                             config_.shortcut));
        in_ch = width;
      }
    }
    params_.clear();
    stem_conv_.collect(params_);
    stem_bn_.collect(params_);
    for (auto& blk : blocks_) blk->collect(params_);
    head_.collect(params_);
  }

  // parameters() hands out pointers into this object.
  ResNet(const ResNet&) = delete;
  ResNet& operator=(const ResNet&) = delete;

  void init(Rng& rng) {
    stem_conv_.init(rng);
    for (auto& blk : blocks_) blk->init(rng);
    head_.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (x.c() != 3) {
      throw ShapeError("model expects 3 input channels, got " + shape_string(x.shape()));
    }
    Tensor<T> y = stem_conv_.forward(x, mode);
    y = stem_bn_.forward(y, mode);
    if (mode == Mode::Train) stem_pre_relu_ = y;
    y = relu(y);
    for (auto& blk : blocks_) y = blk->forward(y, mode);
    if (mode == Mode::Train) {
      final_h_ = y.h();
      final_w_ = y.w();
      has_cache_ = true;
    } else {
      has_cache_ = false;
    }
    y = global_avg_pool(y);
    return head_.forward(y, mode);
  }

  Tensor<T> backward(const Tensor<T>& grad_logits) {
    if (!has_cache_) throw StateError("model: backward without a train-mode forward");
    Tensor<T> g = head_.backward(grad_logits);
    g = global_avg_pool_backward(g, final_h_, final_w_);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = (*it)->backward(g);
    g = relu_backward(g, stem_pre_relu_);
    g = stem_bn_.backward(g);
    return stem_conv_.backward(g);
  }

  // Stable order: stem, blocks stage by stage, head.
  const std::vector<Param<T>*>& parameters() { return params_; }

  std::vector<NamedTensor<T>> buffers() {
    std::vector<NamedTensor<T>> out;
    stem_bn_.collect_buffers(out);
    for (auto& blk : blocks_) blk->collect_buffers(out);
    return out;
  }

  // Trainable scalars. Hexagonal kernels count seven per channel pair; the
  // storage zeros in their side tensors are excluded.
  std::size_t parameter_count() const {
    std::size_t total = stem_conv_.param_count() + stem_bn_.param_count() + head_.param_count();
    for (const auto& blk : blocks_) total += blk->param_count();
    return total;
  }

  std::size_t hex_layer_count() const {
    std::size_t n = 0;
    for (const auto& blk : blocks_)
      if (blk->has_hex()) ++n;
    return n;
  }

  const ArchConfig& config() const { return config_; }
  std::size_t blocks_per_stage() const { return blocks_per_stage_; }

private:
  ArchConfig config_;
  std::size_t blocks_per_stage_ = 0;
  Conv2dLayer<T> stem_conv_;
  BatchNormLayer<T> stem_bn_;
  std::vector<std::unique_ptr<ResidualBlock<T>>> blocks_;
  LinearLayer<T> head_;
  std::vector<Param<T>*> params_;
  Tensor<T> stem_pre_relu_;
  std::size_t final_h_ = 0, final_w_ = 0;
  bool has_cache_ = false;
};

}  // namespace hexnet
