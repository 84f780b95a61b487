#include "hexnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "hexnet/cifar10.hpp"

namespace hexnet {
namespace {

std::uint8_t clamp_byte(int v) {
  return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

// Classes are sinusoidal gratings: label / 2 picks the frequency, label % 2
// the orientation. The grating has zero spatial mean and the base color is
// drawn per image, so nothing about the class survives global averaging and
// the network has to resolve the texture itself.
CifarRecord make_record(int label, Rng& rng) {
  constexpr std::size_t side = kCifarImageSide;
  constexpr std::size_t plane = side * side;
  constexpr double tau = 6.283185307179586;
  const double cycles = 1.0 + 0.5 * static_cast<double>(label / 2);
  const bool vertical = (label % 2) != 0;
  const double phase = tau * static_cast<double>(rng.uniform_index(1024)) / 1024.0;
  int base[3];
  for (std::size_t ch = 0; ch < kCifarChannels; ++ch) {
    base[ch] = 70 + static_cast<int>(rng.uniform_index(116));
  }

  CifarRecord rec;
  rec.label = static_cast<std::uint8_t>(label);
  for (std::size_t ch = 0; ch < kCifarChannels; ++ch) {
    std::uint8_t* p = rec.pixels.data() + ch * plane;
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        const double along = static_cast<double>(vertical ? c : r);
        const double wave = std::sin(tau * cycles * along / static_cast<double>(side) + phase);
        int v = base[ch] + static_cast<int>(14.0 * wave);
        v += static_cast<int>(rng.uniform_index(91)) - 45;
        p[r * side + c] = clamp_byte(v);
      }
    }
  }
  return rec;
}

void write_file(const std::string& path, Rng& rng) {
  std::vector<CifarRecord> records;
  records.reserve(kCifarRecordsPerFile);
  for (std::size_t i = 0; i < kCifarRecordsPerFile; ++i) {
    records.push_back(make_record(static_cast<int>(rng.uniform_index(10)), rng));
  }
  write_cifar_file(path, records.data(), records.size());
}

}  // namespace

void write_synthetic_cifar10(const std::string& dir, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  Rng rng(seed);
  for (int i = 1; i <= 5; ++i) {
    write_file(dir + "/data_batch_" + std::to_string(i) + ".bin", rng);
  }
  write_file(dir + "/test_batch.bin", rng);
}

}  // namespace hexnet
