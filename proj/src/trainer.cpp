#include "hexnet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <map>

#include "hexnet/error.hpp"
#include "hexnet/layers.hpp"

namespace hexnet {
namespace {

using Clock = std::chrono::steady_clock;

// The five data batches hold 50,000 records; 5,000 go to validation.
constexpr std::size_t kTrainRecords = 50000;

Tensor<float> assemble_batch(const std::vector<CifarRecord>& records,
                             const std::uint32_t* indices, std::size_t count,
                             const ChannelStats& stats, Rng* augment_rng) {
  Tensor<float> batch(count, kCifarChannels, kCifarImageSide, kCifarImageSide);
  for (std::size_t i = 0; i < count; ++i) {
    const CifarRecord& rec = records.at(indices[i]);
    Tensor<float> img =
        augment_rng ? augment(rec, stats, *augment_rng) : eval_transform(rec, stats);
    std::memcpy(batch.sample_data(i), img.data(), img.size() * sizeof(float));
  }
  return batch;
}

std::vector<int> batch_labels(const std::vector<CifarRecord>& records,
                              const std::uint32_t* indices, std::size_t count) {
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = records.at(indices[i]).label;
  return labels;
}

Checkpoint make_checkpoint(ResNet<float>& model, const TrainConfig& cfg,
                           std::vector<Tensor<float>>& velocities, std::uint64_t iteration,
                           std::uint64_t completed_epochs, const Rng& order_rng) {
  Checkpoint ckpt;
  ckpt.arch = model.config();
  ckpt.train = cfg;
  ckpt.iteration = iteration;
  ckpt.completed_epochs = completed_epochs;
  const auto& params = model.parameters();
  for (const Param<float>* p : params) ckpt.params.emplace_back(p->name, p->value);
  for (const NamedTensor<float>& b : model.buffers()) ckpt.buffers.emplace_back(b.name, *b.value);
  if (velocities.empty()) velocities.assign(params.size(), Tensor<float>());
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<float> v = velocities[i].empty() ? Tensor<float>(params[i]->value.shape())
                                            : velocities[i];
    ckpt.velocities.emplace_back(params[i]->name, std::move(v));
  }
  ckpt.rng_states.emplace_back("order_stream", order_rng.serialize());
  return ckpt;
}

TrainResult run_epochs(ResNet<float>& model, const CifarDataset& data, const TrainConfig& cfg,
                       std::uint64_t iteration, std::uint64_t first_epoch, Rng order_rng,
                       std::vector<Tensor<float>> initial_velocities,
                       const std::string& checkpoint_path, const MetricsSink& sink) {
  cfg.validate();
  if (data.train.size() != kTrainRecords) {
    throw ShapeError("expected " + std::to_string(kTrainRecords) + " training records, got " +
                     std::to_string(data.train.size()));
  }
  const SplitIndices split =
      split_train_validation(data.train.size(), kCifarValidationCount, cfg.seed);
  const ChannelStats stats = compute_channel_stats(data.train, split.train);

  std::vector<std::uint32_t> active(split.train);
  if (cfg.train_limit > 0 && cfg.train_limit < active.size()) {
    active.resize(cfg.train_limit);
  }

  SgdConfig<float> sgd_cfg;
  sgd_cfg.momentum = cfg.momentum;
  sgd_cfg.weight_decay = cfg.weight_decay;
  sgd_cfg.decay_on_batchnorm = cfg.decay_on_batchnorm;
  Sgd<float> sgd(sgd_cfg);
  sgd.velocities() = std::move(initial_velocities);

  TrainResult result;
  auto emit = [&](MetricsRecord record, std::uint64_t completed) {
    result.metrics.push_back(record);
    if (sink) sink(record);
    result.final_checkpoint =
        make_checkpoint(model, cfg, sgd.velocities(), iteration, completed, order_rng);
    if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, result.final_checkpoint);
  };

  if (first_epoch >= cfg.epochs) {
    const auto start = Clock::now();
    const EvalResult val =
        evaluate(model, data.train, split.validation, stats, cfg.batch_size);
    MetricsRecord record;
    record.epoch = first_epoch;
    record.val_loss = val.loss;
    record.top1_percent = val.top1_percent;
    record.top5_percent = val.top5_percent;
    record.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    emit(record, first_epoch);
    return result;
  }

  for (std::uint64_t epoch = first_epoch; epoch < cfg.epochs; ++epoch) {
    const auto start = Clock::now();
    std::vector<std::uint32_t> order(active);
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = order_rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }

    double loss_sum = 0.0;
    std::size_t sample_count = 0;
    for (std::size_t off = 0; off < order.size(); off += cfg.batch_size) {
      const std::size_t count = std::min<std::size_t>(cfg.batch_size, order.size() - off);
      Tensor<float> batch =
          assemble_batch(data.train, order.data() + off, count, stats, &order_rng);
      const std::vector<int> labels = batch_labels(data.train, order.data() + off, count);

      Tensor<float> logits = model.forward(batch, Mode::Train);
      LossResult<float> loss = softmax_cross_entropy(logits, labels);
      if (!std::isfinite(loss.loss)) {
        throw NumericError("non-finite training loss at iteration " +
                           std::to_string(iteration));
      }
      model.backward(loss.grad_logits);
      sgd.step(model.parameters(), cfg.lr_at(iteration));
      ++iteration;
      loss_sum += loss.loss * static_cast<double>(count);
      sample_count += count;
    }

    const EvalResult val =
        evaluate(model, data.train, split.validation, stats, cfg.batch_size);
    MetricsRecord record;
    record.epoch = epoch + 1;
    record.train_loss = loss_sum / static_cast<double>(sample_count);
    record.val_loss = val.loss;
    record.top1_percent = val.top1_percent;
    record.top5_percent = val.top5_percent;
    record.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    emit(record, epoch + 1);
  }
  return result;
}

}  // namespace

bool topk_correct(const float* scores, std::size_t classes, int label, std::size_t k) {
  if (label < 0 || static_cast<std::size_t>(label) >= classes) {
    throw ShapeError("label outside class range");
  }
  const float target = scores[label];
  std::size_t rank = 0;
  for (std::size_t j = 0; j < classes; ++j) {
    if (scores[j] > target) ++rank;
    else if (scores[j] == target && j < static_cast<std::size_t>(label)) ++rank;
  }
  return rank < k;
}

EvalResult evaluate(ResNet<float>& model, const std::vector<CifarRecord>& records,
                    const std::vector<std::uint32_t>& indices, const ChannelStats& stats,
                    std::size_t batch_size) {
  if (batch_size == 0) throw ShapeError("evaluate: batch size must be positive");
  if (indices.empty()) throw ShapeError("evaluate: empty split");
  double loss_sum = 0.0;
  std::size_t top1 = 0, top5 = 0;
  for (std::size_t off = 0; off < indices.size(); off += batch_size) {
    const std::size_t count = std::min(batch_size, indices.size() - off);
    Tensor<float> batch = assemble_batch(records, indices.data() + off, count, stats, nullptr);
    const std::vector<int> labels = batch_labels(records, indices.data() + off, count);
    Tensor<float> logits = model.forward(batch, Mode::Eval);
    const LossResult<float> loss = softmax_cross_entropy(logits, labels);
    loss_sum += loss.loss * static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      const float* scores = logits.sample_data(i);
      if (topk_correct(scores, logits.c(), labels[i], 1)) ++top1;
      if (topk_correct(scores, logits.c(), labels[i], 5)) ++top5;
    }
  }
  EvalResult result;
  result.loss = loss_sum / static_cast<double>(indices.size());
  result.top1_percent = 100.0 * static_cast<double>(top1) / static_cast<double>(indices.size());
  result.top5_percent = 100.0 * static_cast<double>(top5) / static_cast<double>(indices.size());
  return result;
}

TrainResult train(ResNet<float>& model, const CifarDataset& data, const TrainConfig& cfg,
                  const std::string& checkpoint_path, const MetricsSink& sink) {
  cfg.validate();
  Rng master(cfg.seed);
  Rng init_rng(master.next_u64());
  Rng order_rng(master.next_u64());
  model.init(init_rng);
  return run_epochs(model, data, cfg, 0, 0, std::move(order_rng), {}, checkpoint_path, sink);
}

TrainResult resume(ResNet<float>& model, const CifarDataset& data, const Checkpoint& ckpt,
                   std::uint64_t total_epochs, const std::string& checkpoint_path,
                   const MetricsSink& sink) {
  restore_model(model, ckpt);
  TrainConfig cfg = ckpt.train;
  if (total_epochs > 0) cfg.epochs = total_epochs;
  if (cfg.epochs < ckpt.completed_epochs) {
    throw StateError("checkpoint already has " + std::to_string(ckpt.completed_epochs) +
                     " epochs, cannot train to " + std::to_string(cfg.epochs));
  }

  const auto& params = model.parameters();
  if (ckpt.velocities.size() != params.size()) {
    throw FormatError("checkpoint velocity count does not match model");
  }
  std::vector<Tensor<float>> velocities;
  velocities.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, tensor] = ckpt.velocities[i];
    if (name != params[i]->name || !tensor.same_shape(params[i]->value)) {
      throw FormatError("checkpoint velocity mismatch for " + params[i]->name);
    }
    velocities.push_back(tensor);
  }

  Rng order_rng;
  bool found = false;
  for (const auto& [name, state] : ckpt.rng_states) {
    if (name == "order_stream") {
      order_rng.deserialize(state);
      found = true;
    }
  }
  if (!found) throw FormatError("checkpoint lacks the data-order rng state");

  return run_epochs(model, data, cfg, ckpt.iteration, ckpt.completed_epochs,
                    std::move(order_rng), std::move(velocities), checkpoint_path, sink);
}

void restore_model(ResNet<float>& model, const Checkpoint& ckpt) {
  if (ckpt.arch.depth != model.config().depth ||
      ckpt.arch.shortcut != model.config().shortcut ||
      ckpt.arch.num_classes != model.config().num_classes) {
    throw FormatError("checkpoint architecture does not match the model");
  }
  std::map<std::string, Param<float>*> by_name;
  for (Param<float>* p : model.parameters()) by_name[p->name] = p;
  if (ckpt.params.size() != by_name.size()) {
    throw FormatError("checkpoint parameter count does not match model");
  }
  for (const auto& [name, tensor] : ckpt.params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint has unknown parameter: " + name);
    if (!tensor.same_shape(it->second->value)) {
      throw FormatError("checkpoint shape mismatch for " + name);
    }
    it->second->value = tensor;
  }
  std::map<std::string, Tensor<float>*> buffers;
  for (const NamedTensor<float>& b : model.buffers()) buffers[b.name] = b.value;
  if (ckpt.buffers.size() != buffers.size()) {
    throw FormatError("checkpoint buffer count does not match model");
  }
  for (const auto& [name, tensor] : ckpt.buffers) {
    auto it = buffers.find(name);
    if (it == buffers.end()) throw FormatError("checkpoint has unknown buffer: " + name);
    if (!tensor.same_shape(*it->second)) {
      throw FormatError("checkpoint shape mismatch for " + name);
    }
    *it->second = tensor;
  }
}

}  // namespace hexnet
