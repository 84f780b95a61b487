#include "hexnet/cifar10.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "hexnet/error.hpp"

namespace hexnet {
namespace {

void load_file(const std::string& path, std::vector<CifarRecord>& out) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("missing batch file: " + path);
  if (size != kCifarFileBytes) {
    throw FormatError("batch file " + path + " is " + std::to_string(size) +
                      " bytes, expected " + std::to_string(kCifarFileBytes));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open batch file: " + path);
  for (std::size_t r = 0; r < kCifarRecordsPerFile; ++r) {
    CifarRecord rec;
    char label = 0;
    in.read(&label, 1);
    in.read(reinterpret_cast<char*>(rec.pixels.data()), kCifarPixelsPerRecord);
    if (!in) throw IoError("short read in batch file: " + path);
    rec.label = static_cast<std::uint8_t>(label);
    if (rec.label >= kCifarClasses) {
      throw FormatError("batch file " + path + " record " + std::to_string(r) +
                        " has label " + std::to_string(rec.label));
    }
    out.push_back(rec);
  }
}

}  // namespace

CifarDataset load_cifar10(const std::string& dir) {
  CifarDataset ds;
  ds.train.reserve(5 * kCifarRecordsPerFile);
  ds.test.reserve(kCifarRecordsPerFile);
  for (int i = 1; i <= 5; ++i) {
    load_file(dir + "/data_batch_" + std::to_string(i) + ".bin", ds.train);
  }
  load_file(dir + "/test_batch.bin", ds.test);
  return ds;
}

void write_cifar_file(const std::string& path, const CifarRecord* records, std::size_t count) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (std::size_t r = 0; r < count; ++r) {
    const char label = static_cast<char>(records[r].label);
    out.write(&label, 1);
    out.write(reinterpret_cast<const char*>(records[r].pixels.data()), kCifarPixelsPerRecord);
  }
  if (!out) throw IoError("write failed: " + path);
}

SplitIndices split_train_validation(std::size_t total, std::size_t validation_count,
                                    std::uint64_t seed) {
  if (validation_count > total) {
    throw ShapeError("validation count " + std::to_string(validation_count) +
                     " exceeds dataset size " + std::to_string(total));
  }
  std::vector<std::uint32_t> order(total);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  for (std::size_t i = total; i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(order[i - 1], order[j]);
  }
  SplitIndices split;
  split.validation.assign(order.begin(), order.begin() + validation_count);
  split.train.assign(order.begin() + validation_count, order.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

ChannelStats compute_channel_stats(const std::vector<CifarRecord>& records,
                                   const std::vector<std::uint32_t>& indices) {
  if (indices.empty()) throw ShapeError("channel stats need at least one record");
  constexpr std::size_t plane = kCifarImageSide * kCifarImageSide;
  ChannelStats stats;
  std::array<double, kCifarChannels> sum{}, sum_sq{};
  for (const std::uint32_t idx : indices) {
    const CifarRecord& rec = records.at(idx);
    for (std::size_t ch = 0; ch < kCifarChannels; ++ch) {
      const std::uint8_t* p = rec.pixels.data() + ch * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double v = p[i] / 255.0;
        sum[ch] += v;
        sum_sq[ch] += v * v;
      }
    }
  }
  const double count = static_cast<double>(indices.size()) * plane;
  for (std::size_t ch = 0; ch < kCifarChannels; ++ch) {
    stats.mean[ch] = sum[ch] / count;
    const double var = std::max(0.0, sum_sq[ch] / count - stats.mean[ch] * stats.mean[ch]);
    stats.stddev[ch] = std::sqrt(var);
  }
  return stats;
}

Tensor<float> augment_with(const CifarRecord& rec, const ChannelStats& stats,
                           std::size_t row_offset, std::size_t col_offset, bool flip) {
  if (row_offset > 2 * kCifarPad || col_offset > 2 * kCifarPad) {
    throw ShapeError("crop offset outside the padded image");
  }
  constexpr std::size_t side = kCifarImageSide;
  Tensor<float> out(1, kCifarChannels, side, side);
  for (std::size_t ch = 0; ch < kCifarChannels; ++ch) {
    const std::uint8_t* src = rec.pixels.data() + ch * side * side;
    const double mean = stats.mean[ch];
    const double inv_std = stats.stddev[ch] > 0 ? 1.0 / stats.stddev[ch] : 0.0;
    // Standardized value of the zero padding ring.
    const float pad_value = static_cast<float>((0.0 - mean) * inv_std);
    float* dst = out.plane_data(0, ch);
    for (std::size_t r = 0; r < side; ++r) {
      // Position of output row r inside the 40x40 padded image, mapped back
      // onto the original 32x32 grid.
      const long src_r = static_cast<long>(r + row_offset) - static_cast<long>(kCifarPad);
      for (std::size_t c = 0; c < side; ++c) {
        const std::size_t out_c = flip ? side - 1 - c : c;
        const long src_c = static_cast<long>(c + col_offset) - static_cast<long>(kCifarPad);
        float v = pad_value;
        if (src_r >= 0 && src_r < static_cast<long>(side) && src_c >= 0 &&
            src_c < static_cast<long>(side)) {
          const double raw = src[src_r * side + src_c] / 255.0;
          v = static_cast<float>((raw - mean) * inv_std);
        }
        dst[r * side + out_c] = v;
      }
    }
  }
  return out;
}

Tensor<float> augment(const CifarRecord& rec, const ChannelStats& stats, Rng& rng) {
  const std::size_t row_offset = rng.uniform_index(2 * kCifarPad + 1);
  const std::size_t col_offset = rng.uniform_index(2 * kCifarPad + 1);
  const bool flip = rng.bernoulli(0.5);
  return augment_with(rec, stats, row_offset, col_offset, flip);
}

Tensor<float> eval_transform(const CifarRecord& rec, const ChannelStats& stats) {
  return augment_with(rec, stats, kCifarPad, kCifarPad, false);
}

}  // namespace hexnet
