#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hexnet {

// Hyperparameters of one training run. Defaults follow the reference
// protocol: 182 epochs, batch 128, lr 0.1 divided by 10 at iterations 32k,
// 48k and 64k, momentum 0.9, weight decay 1e-3.
struct TrainConfig {
  std::uint64_t epochs = 182;
  std::uint64_t batch_size = 128;
  double base_lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  std::vector<std::uint64_t> lr_drop_iterations = {32000, 48000, 64000};
  std::uint64_t seed = 0;
  bool decay_on_batchnorm = true;
  // Cap on the number of training-split images used per epoch; 0 means all.
  std::uint64_t train_limit = 0;

  void validate() const {
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    for (std::size_t i = 1; i < lr_drop_iterations.size(); ++i) {
      if (lr_drop_iterations[i] <= lr_drop_iterations[i - 1]) {
        throw std::invalid_argument("lr drop iterations must be strictly increasing");
      }
    }
  }

  // Learning rate in effect for the given global iteration: the base rate
  // divided by 10 once per drop iteration already reached.
  double lr_at(std::uint64_t iteration) const {
    int drops = 0;
    for (const std::uint64_t d : lr_drop_iterations) {
      if (iteration >= d) ++drops;
    }
    return base_lr * std::pow(0.1, drops);
  }
};

}  // namespace hexnet
