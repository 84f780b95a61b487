#include "hexnet.h"

#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "hexnet/checkpoint.hpp"
#include "hexnet/cifar10.hpp"
#include "hexnet/conv2d.hpp"
#include "hexnet/error.hpp"
#include "hexnet/hexconv.hpp"
#include "hexnet/parallel.hpp"
#include "hexnet/resnet.hpp"
#include "hexnet/synthetic.hpp"
#include "hexnet/trainer.hpp"
#include "hexnet/verify.hpp"

// Opaque handle definitions. Both are plain wrappers so the C++ types stay
// invisible to API consumers.
struct hexnet_model {
  hexnet::ArchConfig config;
  hexnet::ResNet<float> net;
  explicit hexnet_model(const hexnet::ArchConfig& cfg) : config(cfg), net(cfg) {}
};

struct hexnet_dataset {
  hexnet::CifarDataset data;
};

namespace {

thread_local std::string t_last_error;

void set_error(const std::string& message) { t_last_error = message; }

// Maps the C++ error taxonomy onto status codes; every API entry point runs
// its body through here so exceptions never cross the boundary.
template <typename Fn>
hexnet_status guarded(Fn&& fn) {
  try {
    fn();
    return HEXNET_OK;
  } catch (const hexnet::ShapeError& e) {
    set_error(e.what());
    return HEXNET_ERR_SHAPE_MISMATCH;
  } catch (const hexnet::IoError& e) {
    set_error(e.what());
    return HEXNET_ERR_IO;
  } catch (const hexnet::FormatError& e) {
    set_error(e.what());
    return HEXNET_ERR_FORMAT;
  } catch (const hexnet::NumericError& e) {
    set_error(e.what());
    return HEXNET_ERR_NUMERIC;
  } catch (const hexnet::StateError& e) {
    set_error(e.what());
    return HEXNET_ERR_STATE;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return HEXNET_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    set_error(e.what());
    return HEXNET_ERR_INTERNAL;
  } catch (...) {
    set_error("unknown error");
    return HEXNET_ERR_INTERNAL;
  }
}

hexnet_status require(bool ok, const char* message) {
  if (ok) return HEXNET_OK;
  set_error(message);
  return HEXNET_ERR_INVALID_ARGUMENT;
}

hexnet::ConvSpec to_spec(const hexnet_conv_spec& c, std::size_t in_ch, std::size_t out_ch) {
  hexnet::ConvSpec s;
  s.kh = c.kernel_h;
  s.kw = c.kernel_w;
  s.stride_h = c.stride_h;
  s.stride_w = c.stride_w;
  s.pad_top = c.pad_top;
  s.pad_bottom = c.pad_bottom;
  s.pad_left = c.pad_left;
  s.pad_right = c.pad_right;
  s.dilation_h = c.dilation_h;
  s.dilation_w = c.dilation_w;
  s.in_channels = in_ch;
  s.out_channels = out_ch;
  return s;
}

hexnet::Tensor<float> wrap_input(const float* data, const size_t shape[4]) {
  hexnet::Tensor<float> t(shape[0], shape[1], shape[2], shape[3]);
  std::memcpy(t.data(), data, t.size() * sizeof(float));
  return t;
}

hexnet::HexKernel<float> unpack_weights7(const float* weights7, std::size_t out_ch,
                                         std::size_t in_ch) {
  hexnet::HexKernel<float> kernel(out_ch, in_ch);
  std::size_t idx = 0;
  for (std::size_t o = 0; o < out_ch; ++o)
    for (std::size_t i = 0; i < in_ch; ++i)
      for (int w = 0; w < hexnet::kHexWeightCount; ++w)
        kernel.weight(static_cast<hexnet::HexWeight>(w), o, i) = weights7[idx++];
  return kernel;
}

hexnet::TrainConfig to_train_config(const hexnet_train_options& o) {
  hexnet::TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.base_lr = o.base_lr;
  cfg.momentum = o.momentum;
  cfg.weight_decay = o.weight_decay;
  cfg.lr_drop_iterations.assign(o.lr_drop_iterations,
                                o.lr_drop_iterations + o.lr_drop_count);
  cfg.seed = o.seed;
  cfg.decay_on_batchnorm = o.decay_on_batchnorm != 0;
  cfg.train_limit = o.train_limit;
  return cfg;
}

hexnet_metrics_record to_c_record(const hexnet::MetricsRecord& r) {
  hexnet_metrics_record rec;
  rec.epoch = r.epoch;
  rec.has_train_loss = r.train_loss.has_value() ? 1 : 0;
  rec.train_loss = r.train_loss.value_or(0.0);
  rec.val_loss = r.val_loss;
  rec.top1_percent = r.top1_percent;
  rec.top5_percent = r.top5_percent;
  rec.wall_seconds = r.wall_seconds;
  return rec;
}

hexnet::MetricsSink make_sink(hexnet_metrics_callback callback, void* user_data) {
  if (!callback) return {};
  return [callback, user_data](const hexnet::MetricsRecord& r) {
    const hexnet_metrics_record rec = to_c_record(r);
    callback(&rec, user_data);
  };
}

}  // namespace

extern "C" {

const char* hexnet_last_error(void) { return t_last_error.c_str(); }

const char* hexnet_status_name(hexnet_status status) {
  switch (status) {
    case HEXNET_OK: return "ok";
    case HEXNET_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case HEXNET_ERR_SHAPE_MISMATCH: return "shape_mismatch";
    case HEXNET_ERR_IO: return "io";
    case HEXNET_ERR_FORMAT: return "format";
    case HEXNET_ERR_STATE: return "state";
    case HEXNET_ERR_NUMERIC: return "numeric";
    case HEXNET_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

hexnet_status hexnet_set_threads(int threads) {
  return guarded([&] { hexnet::set_thread_count(threads); });
}

int hexnet_threads(void) { return hexnet::thread_count(); }

hexnet_status hexnet_conv2d_output_shape(const hexnet_conv_spec* spec,
                                         const size_t input_shape[4],
                                         const size_t weight_shape[4],
                                         size_t output_shape[4]) {
  if (auto st = require(spec && input_shape && weight_shape && output_shape,
                        "conv2d_output_shape: null argument"))
    return st;
  return guarded([&] {
    const hexnet::ConvSpec s = to_spec(*spec, input_shape[1], weight_shape[0]);
    if (weight_shape[1] != input_shape[1] || weight_shape[2] != s.kh ||
        weight_shape[3] != s.kw) {
      throw hexnet::ShapeError("conv2d: weight extents disagree with input and spec");
    }
    output_shape[0] = input_shape[0];
    output_shape[1] = weight_shape[0];
    output_shape[2] = s.out_h(input_shape[2]);
    output_shape[3] = s.out_w(input_shape[3]);
  });
}

hexnet_status hexnet_conv2d_forward(const hexnet_conv_spec* spec, const float* input,
                                    const size_t input_shape[4], const float* weights,
                                    const size_t weight_shape[4], const float* bias,
                                    float* output) {
  if (auto st = require(spec && input && input_shape && weights && weight_shape && output,
                        "conv2d_forward: null argument"))
    return st;
  return guarded([&] {
    const hexnet::ConvSpec s = to_spec(*spec, input_shape[1], weight_shape[0]);
    hexnet::Tensor<float> in = wrap_input(input, input_shape);
    hexnet::Tensor<float> w = wrap_input(weights, weight_shape);
    std::vector<float> bias_vec;
    const std::vector<float>* bias_ptr = nullptr;
    if (bias) {
      bias_vec.assign(bias, bias + weight_shape[0]);
      bias_ptr = &bias_vec;
    }
    hexnet::Tensor<float> out = hexnet::conv2d_forward(in, w, bias_ptr, s);
    std::memcpy(output, out.data(), out.size() * sizeof(float));
  });
}

hexnet_status hexnet_hexconv_forward(const float* input, const size_t input_shape[4],
                                     const float* weights7, size_t out_channels,
                                     const float* bias, int use_reference, float* output) {
  if (auto st = require(input && input_shape && weights7 && output,
                        "hexconv_forward: null argument"))
    return st;
  if (auto st = require(out_channels > 0, "hexconv_forward: out_channels must be positive"))
    return st;
  return guarded([&] {
    hexnet::Tensor<float> in = wrap_input(input, input_shape);
    hexnet::HexKernel<float> kernel = unpack_weights7(weights7, out_channels, input_shape[1]);
    std::vector<float> bias_vec;
    const std::vector<float>* bias_ptr = nullptr;
    if (bias) {
      bias_vec.assign(bias, bias + out_channels);
      bias_ptr = &bias_vec;
    }
    hexnet::Tensor<float> out =
        use_reference
            ? hexnet::hexconv_forward_reference(in, kernel.side, kernel.column, bias_ptr)
            : hexnet::hexconv_forward(in, kernel.side, kernel.column, bias_ptr);
    std::memcpy(output, out.data(), out.size() * sizeof(float));
  });
}

hexnet_status hexnet_model_create(int depth, const char* shortcut_mode, size_t num_classes,
                                  hexnet_model** out_model) {
  if (auto st = require(shortcut_mode && out_model, "model_create: null argument")) return st;
  return guarded([&] {
    hexnet::ArchConfig cfg;
    cfg.depth = depth;
    cfg.shortcut = hexnet::shortcut_mode_from_string(shortcut_mode);
    cfg.num_classes = num_classes;
    cfg.validate();
    *out_model = new hexnet_model(cfg);
  });
}

void hexnet_model_free(hexnet_model* model) { delete model; }

hexnet_status hexnet_model_init(hexnet_model* model, uint64_t seed) {
  if (auto st = require(model != nullptr, "model_init: null model")) return st;
  return guarded([&] {
    hexnet::Rng rng(seed);
    model->net.init(rng);
  });
}

hexnet_status hexnet_model_param_count(const hexnet_model* model, uint64_t* out_count) {
  if (auto st = require(model && out_count, "model_param_count: null argument")) return st;
  *out_count = model->net.parameter_count();
  return HEXNET_OK;
}

hexnet_status hexnet_model_hex_layer_count(const hexnet_model* model, uint64_t* out_count) {
  if (auto st = require(model && out_count, "model_hex_layer_count: null argument")) return st;
  *out_count = model->net.hex_layer_count();
  return HEXNET_OK;
}

hexnet_status hexnet_model_forward(hexnet_model* model, const float* input, size_t batch,
                                   size_t height, size_t width, float* out_scores) {
  if (auto st = require(model && input && out_scores, "model_forward: null argument"))
    return st;
  return guarded([&] {
    hexnet::Tensor<float> in(batch, 3, height, width);
    std::memcpy(in.data(), input, in.size() * sizeof(float));
    hexnet::Tensor<float> scores = model->net.forward(in, hexnet::Mode::Eval);
    std::memcpy(out_scores, scores.data(), scores.size() * sizeof(float));
  });
}

hexnet_status hexnet_model_save(hexnet_model* model, const char* path) {
  if (auto st = require(model && path, "model_save: null argument")) return st;
  return guarded([&] {
    hexnet::Checkpoint ckpt;
    ckpt.arch = model->config;
    for (hexnet::Param<float>* p : model->net.parameters()) {
      ckpt.params.emplace_back(p->name, p->value);
    }
    for (const hexnet::NamedTensor<float>& b : model->net.buffers()) {
      ckpt.buffers.emplace_back(b.name, *b.value);
    }
    hexnet::save_checkpoint(path, ckpt);
  });
}

hexnet_status hexnet_model_load(const char* path, hexnet_model** out_model) {
  if (auto st = require(path && out_model, "model_load: null argument")) return st;
  return guarded([&] {
    const hexnet::Checkpoint ckpt = hexnet::load_checkpoint(path);
    auto model = std::make_unique<hexnet_model>(ckpt.arch);
    hexnet::restore_model(model->net, ckpt);
    *out_model = model.release();
  });
}

hexnet_status hexnet_checkpoint_info(const char* path, int* depth, char* shortcut_mode_buf,
                                     size_t shortcut_mode_buf_len, uint64_t* num_classes,
                                     uint64_t* completed_epochs, uint64_t* iteration,
                                     uint64_t* seed) {
  if (auto st = require(path != nullptr, "checkpoint_info: null path")) return st;
  return guarded([&] {
    const hexnet::Checkpoint ckpt = hexnet::load_checkpoint(path);
    if (depth) *depth = ckpt.arch.depth;
    if (shortcut_mode_buf && shortcut_mode_buf_len > 0) {
      const std::string mode = hexnet::to_string(ckpt.arch.shortcut);
      const std::size_t n = std::min(mode.size(), shortcut_mode_buf_len - 1);
      std::memcpy(shortcut_mode_buf, mode.data(), n);
      shortcut_mode_buf[n] = '\0';
    }
    if (num_classes) *num_classes = ckpt.arch.num_classes;
    if (completed_epochs) *completed_epochs = ckpt.completed_epochs;
    if (iteration) *iteration = ckpt.iteration;
    if (seed) *seed = ckpt.train.seed;
  });
}

hexnet_status hexnet_dataset_open(const char* dir, hexnet_dataset** out_dataset) {
  if (auto st = require(dir && out_dataset, "dataset_open: null argument")) return st;
  return guarded([&] {
    auto ds = std::make_unique<hexnet_dataset>();
    ds->data = hexnet::load_cifar10(dir);
    *out_dataset = ds.release();
  });
}

void hexnet_dataset_free(hexnet_dataset* dataset) { delete dataset; }

hexnet_status hexnet_dataset_counts(const hexnet_dataset* dataset, uint64_t* out_train,
                                    uint64_t* out_test) {
  if (auto st = require(dataset != nullptr, "dataset_counts: null dataset")) return st;
  if (out_train) *out_train = dataset->data.train.size();
  if (out_test) *out_test = dataset->data.test.size();
  return HEXNET_OK;
}

hexnet_status hexnet_write_synthetic_cifar(const char* dir, uint64_t seed) {
  if (auto st = require(dir != nullptr, "write_synthetic_cifar: null dir")) return st;
  return guarded([&] { hexnet::write_synthetic_cifar10(dir, seed); });
}

void hexnet_train_options_defaults(hexnet_train_options* options) {
  if (!options) return;
  static const uint64_t kDrops[3] = {32000, 48000, 64000};
  options->epochs = 182;
  options->batch_size = 128;
  options->base_lr = 0.1;
  options->momentum = 0.9;
  options->weight_decay = 1e-3;
  options->lr_drop_iterations = kDrops;
  options->lr_drop_count = 3;
  options->seed = 0;
  options->decay_on_batchnorm = 1;
  options->train_limit = 0;
  options->checkpoint_path = nullptr;
}

hexnet_status hexnet_train(hexnet_model* model, const hexnet_dataset* dataset,
                           const hexnet_train_options* options,
                           hexnet_metrics_callback callback, void* user_data) {
  if (auto st = require(model && dataset && options, "train: null argument")) return st;
  if (auto st = require(options->lr_drop_count == 0 || options->lr_drop_iterations,
                        "train: lr_drop_iterations null with nonzero count"))
    return st;
  return guarded([&] {
    const hexnet::TrainConfig cfg = to_train_config(*options);
    const std::string ckpt_path = options->checkpoint_path ? options->checkpoint_path : "";
    hexnet::train(model->net, dataset->data, cfg, ckpt_path, make_sink(callback, user_data));
  });
}

hexnet_status hexnet_train_resume(const hexnet_dataset* dataset, const char* resume_from,
                                  uint64_t total_epochs, const char* checkpoint_path,
                                  hexnet_metrics_callback callback, void* user_data,
                                  hexnet_model** out_model) {
  if (auto st = require(dataset && resume_from && out_model, "train_resume: null argument"))
    return st;
  return guarded([&] {
    const hexnet::Checkpoint ckpt = hexnet::load_checkpoint(resume_from);
    auto model = std::make_unique<hexnet_model>(ckpt.arch);
    const std::string ckpt_path = checkpoint_path ? checkpoint_path : "";
    hexnet::resume(model->net, dataset->data, ckpt, total_epochs, ckpt_path,
                   make_sink(callback, user_data));
    *out_model = model.release();
  });
}

hexnet_status hexnet_evaluate(hexnet_model* model, const hexnet_dataset* dataset,
                              const char* split, uint64_t split_seed, uint64_t batch_size,
                              double* out_loss, double* out_top1, double* out_top5) {
  if (auto st = require(model && dataset && split, "evaluate: null argument")) return st;
  return guarded([&] {
    const std::string which = split;
    const hexnet::SplitIndices parts = hexnet::split_train_validation(
        dataset->data.train.size(), hexnet::kCifarValidationCount, split_seed);
    const hexnet::ChannelStats stats =
        hexnet::compute_channel_stats(dataset->data.train, parts.train);

    const std::vector<hexnet::CifarRecord>* records = &dataset->data.train;
    const std::vector<std::uint32_t>* indices = nullptr;
    std::vector<std::uint32_t> test_indices;
    if (which == "validation") {
      indices = &parts.validation;
    } else if (which == "train_split") {
      indices = &parts.train;
    } else if (which == "test") {
      records = &dataset->data.test;
      test_indices.resize(dataset->data.test.size());
      for (std::size_t i = 0; i < test_indices.size(); ++i)
        test_indices[i] = static_cast<std::uint32_t>(i);
      indices = &test_indices;
    } else {
      throw std::invalid_argument("unknown split: " + which +
                                  " (expected validation, train_split or test)");
    }
    const hexnet::EvalResult r =
        hexnet::evaluate(model->net, *records, *indices, stats, batch_size);
    if (out_loss) *out_loss = r.loss;
    if (out_top1) *out_top1 = r.top1_percent;
    if (out_top5) *out_top5 = r.top5_percent;
  });
}

hexnet_status hexnet_verify_hexconv(size_t cases, uint64_t seed, double* out_max_deviation) {
  if (auto st = require(out_max_deviation != nullptr, "verify_hexconv: null output"))
    return st;
  if (auto st = require(cases > 0, "verify_hexconv: case count must be positive")) return st;
  return guarded([&] {
    const hexnet::OracleSweepResult r = hexnet::hexconv_oracle_sweep(cases, seed);
    *out_max_deviation = r.max_abs_deviation;
  });
}

hexnet_status hexnet_gradcheck(uint64_t seed, hexnet_line_callback callback, void* user_data,
                               double* out_worst_layer, double* out_worst_model) {
  return guarded([&] {
    const hexnet::GradCheckReport report = hexnet::run_gradcheck(seed);
    if (callback) {
      for (const hexnet::GradCheckLine& line : report.lines) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-28s max_rel_err=%.3e coords=%zu", line.name.c_str(),
                      line.max_rel_error, line.coords);
        callback(buf, user_data);
      }
    }
    if (out_worst_layer) *out_worst_layer = report.worst_layer;
    if (out_worst_model) *out_worst_model = report.worst_model;
  });
}

hexnet_status hexnet_bench_conv(size_t in_channels, size_t out_channels, size_t spatial,
                                size_t repeats, uint64_t seed, hexnet_bench_result* out_result) {
  if (auto st = require(out_result != nullptr, "bench_conv: null output")) return st;
  return guarded([&] {
    const hexnet::BenchResult r =
        hexnet::bench_hex_vs_square(in_channels, out_channels, spatial, repeats, seed);
    out_result->repeats = r.repeats;
    out_result->hex_median_ms = r.hex_median_ms;
    out_result->hex_min_ms = r.hex_min_ms;
    out_result->hex_max_ms = r.hex_max_ms;
    out_result->square_median_ms = r.square_median_ms;
    out_result->square_min_ms = r.square_min_ms;
    out_result->square_max_ms = r.square_max_ms;
    out_result->ratio = r.ratio;
  });
}

}  // extern "C"
