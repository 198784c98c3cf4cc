#include "rankpo/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace rankpo {

namespace {

constexpr char kMagic[4] = {'R', 'P', 'O', '1'};
constexpr std::uint8_t kVersion = 1;

void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32_array(std::string& out, const std::vector<double>& values) {
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    put_u32_le(out, bits);
  }
}

void read_f32_array(const unsigned char* p, std::size_t count,
                    std::vector<double>& out) {
  out.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = get_u32_le(p + 4 * i);
    out[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
}

}  // namespace

std::string checkpoint_bytes(const EncoderModel& model) {
  std::string out;
  out.reserve(17 + 4 * model.param_count());
  out.append(kMagic, 4);
  out.push_back(static_cast<char>(kVersion));
  put_u32_le(out, model.hash_dim);
  put_u32_le(out, model.hidden_dim);
  put_u32_le(out, model.out_dim);
  put_f32_array(out, model.w1);
  put_f32_array(out, model.b1);
  put_f32_array(out, model.w2);
  put_f32_array(out, model.b2);
  return out;
}

void save_checkpoint(const EncoderModel& model, const std::string& path) {
  const std::string bytes = checkpoint_bytes(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CheckpointError(CheckpointError::Kind::Io,
                          "cannot open checkpoint for writing: " + path);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) {
    throw CheckpointError(CheckpointError::Kind::ShortWrite,
                          "short write while saving checkpoint: " + path);
  }
}

EncoderModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError(CheckpointError::Kind::Io,
                          "cannot open checkpoint: " + path);
  }
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw CheckpointError(CheckpointError::Kind::Io,
                          "read failure on checkpoint: " + path);
  }
  if (data.size() < 17) {
    if (data.size() >= 4 && std::memcmp(data.data(), kMagic, 4) != 0) {
      throw CheckpointError(CheckpointError::Kind::BadMagic,
                            "not a checkpoint (bad magic): " + path);
    }
    throw CheckpointError(CheckpointError::Kind::LengthMismatch,
                          "checkpoint shorter than header: " + path);
  }
  if (std::memcmp(data.data(), kMagic, 4) != 0) {
    throw CheckpointError(CheckpointError::Kind::BadMagic,
                          "not a checkpoint (bad magic): " + path);
  }
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  if (p[4] != kVersion) {
    throw CheckpointError(CheckpointError::Kind::BadVersion,
                          "unsupported checkpoint version in " + path);
  }
  EncoderModel model;
  model.hash_dim = get_u32_le(p + 5);
  model.hidden_dim = get_u32_le(p + 9);
  model.out_dim = get_u32_le(p + 13);
  const std::size_t n_w1 =
      static_cast<std::size_t>(model.hash_dim) * model.hidden_dim;
  const std::size_t n_w2 =
      static_cast<std::size_t>(model.out_dim) * model.hidden_dim;
  const std::size_t n_params = n_w1 + model.hidden_dim + n_w2 + model.out_dim;
  const std::size_t expected = 17 + 4 * n_params;
  if (data.size() != expected) {
    throw CheckpointError(
        CheckpointError::Kind::LengthMismatch,
        "checkpoint length mismatch in " + path + ": expected " +
            std::to_string(expected) + " bytes, got " +
            std::to_string(data.size()));
  }
  const unsigned char* cursor = p + 17;
  read_f32_array(cursor, n_w1, model.w1);
  cursor += 4 * n_w1;
  read_f32_array(cursor, model.hidden_dim, model.b1);
  cursor += 4 * model.hidden_dim;
  read_f32_array(cursor, n_w2, model.w2);
  cursor += 4 * n_w2;
  read_f32_array(cursor, model.out_dim, model.b2);
  return model;
}

}  // namespace rankpo
