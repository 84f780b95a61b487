#include "hexnet/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "hexnet/error.hpp"

namespace hexnet {
namespace {

// All multi-byte values are little-endian. The writers emit byte by byte so
// the format does not depend on host layout.

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_tensor(std::ostream& out, const std::string& name, const Tensor<float>& t) {
  put_string(out, name);
  for (int d = 0; d < 4; ++d) put_u64(out, t.shape()[static_cast<std::size_t>(d)]);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &t.data()[i], 4);
    put_u32(out, bits);
  }
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw FormatError("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw FormatError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string get_string(std::istream& in) {
  const std::uint32_t len = get_u32(in);
  if (len > (1u << 20)) throw FormatError("checkpoint string length implausible");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw FormatError("checkpoint truncated");
  return s;
}

std::pair<std::string, Tensor<float>> get_tensor(std::istream& in) {
  std::string name = get_string(in);
  Shape4 shape;
  for (auto& d : shape) d = get_u64(in);
  const std::size_t count = shape[0] * shape[1] * shape[2] * shape[3];
  if (count > (1u << 28)) throw FormatError("checkpoint tensor size implausible");
  Tensor<float> t(shape);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = get_u32(in);
    std::memcpy(&t.data()[i], &bits, 4);
  }
  return {std::move(name), std::move(t)};
}

void put_tensor_list(std::ostream& out,
                     const std::vector<std::pair<std::string, Tensor<float>>>& list) {
  put_u64(out, list.size());
  for (const auto& [name, tensor] : list) put_tensor(out, name, tensor);
}

std::vector<std::pair<std::string, Tensor<float>>> get_tensor_list(std::istream& in) {
  const std::uint64_t count = get_u64(in);
  if (count > 100000) throw FormatError("checkpoint tensor count implausible");
  std::vector<std::pair<std::string, Tensor<float>>> list;
  list.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) list.push_back(get_tensor(in));
  return list;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, 4);
  put_u32(out, ckpt.version);

  put_u32(out, static_cast<std::uint32_t>(ckpt.arch.depth));
  put_string(out, to_string(ckpt.arch.shortcut));
  put_u64(out, ckpt.arch.num_classes);

  put_u64(out, ckpt.train.epochs);
  put_u64(out, ckpt.train.batch_size);
  put_f64(out, ckpt.train.base_lr);
  put_f64(out, ckpt.train.momentum);
  put_f64(out, ckpt.train.weight_decay);
  put_u64(out, ckpt.train.lr_drop_iterations.size());
  for (const auto d : ckpt.train.lr_drop_iterations) put_u64(out, d);
  put_u64(out, ckpt.train.seed);
  put_u32(out, ckpt.train.decay_on_batchnorm ? 1 : 0);
  put_u64(out, ckpt.train.train_limit);

  put_u64(out, ckpt.iteration);
  put_u64(out, ckpt.completed_epochs);

  put_tensor_list(out, ckpt.params);
  put_tensor_list(out, ckpt.buffers);
  put_tensor_list(out, ckpt.velocities);

  put_u64(out, ckpt.rng_states.size());
  for (const auto& [name, state] : ckpt.rng_states) {
    put_string(out, name);
    put_string(out, state);
  }
  if (!out) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw FormatError("not a checkpoint file: " + path);
  }
  Checkpoint ckpt;
  ckpt.version = get_u32(in);
  if (ckpt.version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(ckpt.version) +
                      " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
  }

  ckpt.arch.depth = static_cast<int>(get_u32(in));
  ckpt.arch.shortcut = shortcut_mode_from_string(get_string(in));
  ckpt.arch.num_classes = get_u64(in);

  ckpt.train.epochs = get_u64(in);
  ckpt.train.batch_size = get_u64(in);
  ckpt.train.base_lr = get_f64(in);
  ckpt.train.momentum = get_f64(in);
  ckpt.train.weight_decay = get_f64(in);
  const std::uint64_t drops = get_u64(in);
  if (drops > 64) throw FormatError("checkpoint lr drop count implausible");
  ckpt.train.lr_drop_iterations.clear();
  for (std::uint64_t i = 0; i < drops; ++i) {
    ckpt.train.lr_drop_iterations.push_back(get_u64(in));
  }
  ckpt.train.seed = get_u64(in);
  ckpt.train.decay_on_batchnorm = get_u32(in) != 0;
  ckpt.train.train_limit = get_u64(in);

  ckpt.iteration = get_u64(in);
  ckpt.completed_epochs = get_u64(in);

  ckpt.params = get_tensor_list(in);
  ckpt.buffers = get_tensor_list(in);
  ckpt.velocities = get_tensor_list(in);

  const std::uint64_t states = get_u64(in);
  if (states > 1024) throw FormatError("checkpoint rng state count implausible");
  for (std::uint64_t i = 0; i < states; ++i) {
    std::string name = get_string(in);
    std::string state = get_string(in);
    ckpt.rng_states.emplace_back(std::move(name), std::move(state));
  }
  return ckpt;
}

}  // namespace hexnet
