#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hexnet/rng.hpp"
#include "hexnet/tensor.hpp"

namespace hexnet {

inline constexpr std::size_t kCifarImageSide = 32;
inline constexpr std::size_t kCifarChannels = 3;
inline constexpr std::size_t kCifarPixelsPerRecord =
    kCifarChannels * kCifarImageSide * kCifarImageSide;
inline constexpr std::size_t kCifarRecordBytes = 1 + kCifarPixelsPerRecord;  // label first
inline constexpr std::size_t kCifarRecordsPerFile = 10000;
inline constexpr std::size_t kCifarFileBytes = kCifarRecordsPerFile * kCifarRecordBytes;
inline constexpr std::size_t kCifarClasses = 10;
inline constexpr std::size_t kCifarPad = 4;
inline constexpr std::size_t kCifarValidationCount = 5000;

// One image: label byte then 1024 red, 1024 green, 1024 blue bytes, each
// channel row-major.
struct CifarRecord {
  std::uint8_t label = 0;
  std::array<std::uint8_t, kCifarPixelsPerRecord> pixels{};
};

struct CifarDataset {
  std::vector<CifarRecord> train;  // the five data batches, in file order
  std::vector<CifarRecord> test;
};

// Reads data_batch_1..5.bin and test_batch.bin from dir.
CifarDataset load_cifar10(const std::string& dir);

// Writes records in the same binary layout; load followed by write is
// byte-identical.
void write_cifar_file(const std::string& path, const CifarRecord* records, std::size_t count);

// Deterministic partition of [0, total) into a validation set of the given
// size and the remaining training indices, both sorted ascending. Depends on
// the seed only.
struct SplitIndices {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> validation;
};
SplitIndices split_train_validation(std::size_t total, std::size_t validation_count,
                                    std::uint64_t seed);

// Per-channel mean and population standard deviation over the selected
// records, on the 0-1 pixel scale.
struct ChannelStats {
  std::array<double, kCifarChannels> mean{};
  std::array<double, kCifarChannels> stddev{};
};
ChannelStats compute_channel_stats(const std::vector<CifarRecord>& records,
                                   const std::vector<std::uint32_t>& indices);

// Training-time pipeline: zero-pad to 40x40, crop 32x32 at the given offsets,
// optionally mirror horizontally, then standardize per channel. Offsets lie
// in [0, 8]; (4, 4) with no flip reproduces the standardized original.
Tensor<float> augment_with(const CifarRecord& rec, const ChannelStats& stats,
                           std::size_t row_offset, std::size_t col_offset, bool flip);

// Draws row offset, column offset, then the flip from rng and delegates.
Tensor<float> augment(const CifarRecord& rec, const ChannelStats& stats, Rng& rng);

// Evaluation-time pipeline: standardization only.
Tensor<float> eval_transform(const CifarRecord& rec, const ChannelStats& stats);

}  // namespace hexnet
