#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hexnet/resnet.hpp"
#include "hexnet/tensor.hpp"
#include "hexnet/train_config.hpp"

namespace hexnet {

inline constexpr char kCheckpointMagic[4] = {'H', 'X', 'N', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Versioned little-endian binary container holding everything needed to
// resume a run exactly: architecture, hyperparameters, progress counters,
// parameter/buffer/velocity tensors by name, and RNG engine states.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ArchConfig arch;
  TrainConfig train;
  std::uint64_t iteration = 0;
  std::uint64_t completed_epochs = 0;
  std::vector<std::pair<std::string, Tensor<float>>> params;
  std::vector<std::pair<std::string, Tensor<float>>> buffers;
  std::vector<std::pair<std::string, Tensor<float>>> velocities;
  std::vector<std::pair<std::string, std::string>> rng_states;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hexnet
