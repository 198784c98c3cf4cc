#pragma once

#include <stdexcept>
#include <string>

#include "rankpo/encoder.hpp"

namespace rankpo {

// Checkpoint layout (all integers and floats little-endian):
//   bytes 0..3   magic "RPO1"
//   byte  4      format version (1)
//   bytes 5..16  u32 hash_dim, u32 hidden_dim, u32 out_dim
//   then float32 arrays, in order:
//     w1  hash_dim*hidden_dim values, feature-major ([feature][hidden])
//     b1  hidden_dim values
//     w2  out_dim*hidden_dim values, row-major ([out][hidden])
//     b2  out_dim values
// No padding, no trailing bytes.
class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { Io, ShortWrite, BadMagic, BadVersion, LengthMismatch };

  CheckpointError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

void save_checkpoint(const EncoderModel& model, const std::string& path);
EncoderModel load_checkpoint(const std::string& path);

// The exact bytes save_checkpoint would write.
std::string checkpoint_bytes(const EncoderModel& model);

}  // namespace rankpo
