#pragma once

#include <cstdint>
#include <string>

namespace hexnet {

// Writes the six standard CIFAR-10 batch files into dir, filled with a
// seeded synthetic class-colored dataset: each class has a distinct base
// color and a class-positioned bright patch under per-pixel noise, so a
// classifier can learn it quickly. Layout is byte-exact CIFAR-10, so the
// regular loader and training path run unchanged.
void write_synthetic_cifar10(const std::string& dir, std::uint64_t seed);

}  // namespace hexnet
