#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hexnet/checkpoint.hpp"
#include "hexnet/cifar10.hpp"
#include "hexnet/resnet.hpp"
#include "hexnet/train_config.hpp"

namespace hexnet {

// One line of the per-epoch metrics stream. train_loss is absent for the
// eval-only record a zero-epoch run emits. wall_seconds is the only
// non-deterministic field.
struct MetricsRecord {
  std::uint64_t epoch = 0;  // epochs completed when the record was taken
  std::optional<double> train_loss;
  double val_loss = 0.0;
  double top1_percent = 0.0;
  double top5_percent = 0.0;
  double wall_seconds = 0.0;
};

using MetricsSink = std::function<void(const MetricsRecord&)>;

struct TrainResult {
  std::vector<MetricsRecord> metrics;
  Checkpoint final_checkpoint;
};

struct EvalResult {
  double loss = 0.0;
  double top1_percent = 0.0;
  double top5_percent = 0.0;
};

// True when the label ranks inside the top k scores, ties broken in favor of
// the lower class index.
bool topk_correct(const float* scores, std::size_t classes, int label, std::size_t k);

// Eval-mode loss and top-1/top-5 accuracy over the indexed records.
EvalResult evaluate(ResNet<float>& model, const std::vector<CifarRecord>& records,
                    const std::vector<std::uint32_t>& indices, const ChannelStats& stats,
                    std::size_t batch_size);

// Trains from scratch: derives the parameter-init and data-order streams
// from cfg.seed, initializes the model, then runs cfg.epochs epochs. Per
// epoch: shuffled augmented batches, SGD with the iteration-keyed schedule,
// a validation pass, one MetricsRecord (also passed to sink if set), and a
// checkpoint rewrite (if checkpoint_path is set). A zero-epoch run emits one
// eval-only record. Non-finite training loss aborts with the iteration
// number in the message.
TrainResult train(ResNet<float>& model, const CifarDataset& data, const TrainConfig& cfg,
                  const std::string& checkpoint_path = {}, const MetricsSink& sink = {});

// Continues a checkpointed run until total_epochs (0 keeps the checkpoint's
// target). Model parameters, buffers, optimizer velocities, progress
// counters and the data-order stream are restored, so an interrupted run
// finishes bit-identically to an uninterrupted one in single-threaded mode.
TrainResult resume(ResNet<float>& model, const CifarDataset& data, const Checkpoint& ckpt,
                   std::uint64_t total_epochs = 0, const std::string& checkpoint_path = {},
                   const MetricsSink& sink = {});

// Copies checkpointed parameters and buffers into a model built from the
// same architecture; names and shapes must match exactly.
void restore_model(ResNet<float>& model, const Checkpoint& ckpt);

}  // namespace hexnet
