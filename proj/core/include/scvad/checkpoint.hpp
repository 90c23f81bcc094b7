#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "scvad/transformer.hpp"

namespace scvad {

// Model checkpoint, little-endian:
//   "SCVM" | u16 version=1 |
//   u32 feature_dim | u32 model_dim | u32 heads | u32 layers | u32 mlp_hidden |
//   u32 window | u8 readout | u8 self_context | u64 seed | u64 scalar_count |
//   scalar_count f32 in ModelParams::tensors() order, each tensor row-major.
inline constexpr char kCheckpointMagic[4] = {'S', 'C', 'V', 'M'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  SelfContext self_context = SelfContext::kOn;
};

void write_checkpoint(const ModelParams& params, SelfContext self_context, std::ostream& out);
void write_checkpoint(const ModelParams& params, SelfContext self_context,
                      const std::filesystem::path& path);

Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint(const std::filesystem::path& path);
// Throws ConfigError when the stored architecture differs from `expected`.
Checkpoint read_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace scvad
