#include "scvad/checkpoint.hpp"

#include <fstream>
#include <limits>
#include <string>

#include "binary_io.hpp"
#include "scvad/error.hpp"

namespace scvad {
namespace {

std::uint32_t narrow32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError(std::string("checkpoint: ") + what + " too large");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_checkpoint(const ModelParams& params, SelfContext self_context, std::ostream& out) {
  const auto& cfg = params.config;
  out.write(kCheckpointMagic, 4);
  detail::put_le<std::uint16_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, narrow32(cfg.feature_dim, "feature_dim"));
  detail::put_le<std::uint32_t>(out, narrow32(cfg.model_dim, "model_dim"));
  detail::put_le<std::uint32_t>(out, narrow32(cfg.heads, "heads"));
  detail::put_le<std::uint32_t>(out, narrow32(cfg.layers, "layers"));
  detail::put_le<std::uint32_t>(out, narrow32(cfg.hidden(), "mlp_hidden"));
  detail::put_le<std::uint32_t>(out, narrow32(cfg.window, "window"));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(cfg.readout));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(self_context));
  detail::put_le<std::uint64_t>(out, cfg.seed);
  detail::put_le<std::uint64_t>(out, params.parameter_count());
  for (const Tensor2* t : params.tensors()) {
    for (double v : t->data()) detail::put_le<float>(out, static_cast<float>(v));
  }
  if (!out) throw FormatError("checkpoint: write failed");
}

void write_checkpoint(const ModelParams& params, SelfContext self_context, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_checkpoint(params, self_context, out);
  out.close();
  if (!out) throw FormatError("failed writing " + path.string());
}

Checkpoint read_checkpoint(std::istream& in) {
  detail::expect_magic(in, kCheckpointMagic, "checkpoint");
  const auto version = detail::get_le<std::uint16_t>(in, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig cfg;
  cfg.feature_dim = detail::get_le<std::uint32_t>(in, "feature_dim");
  cfg.model_dim = detail::get_le<std::uint32_t>(in, "model_dim");
  cfg.heads = detail::get_le<std::uint32_t>(in, "heads");
  cfg.layers = detail::get_le<std::uint32_t>(in, "layers");
  cfg.mlp_hidden = detail::get_le<std::uint32_t>(in, "mlp_hidden");
  cfg.window = detail::get_le<std::uint32_t>(in, "window");
  const auto readout = detail::get_le<std::uint8_t>(in, "readout");
  const auto self_context = detail::get_le<std::uint8_t>(in, "self_context");
  cfg.seed = detail::get_le<std::uint64_t>(in, "seed");
  const auto count = detail::get_le<std::uint64_t>(in, "scalar count");
  if (readout > 1 || self_context > 1) throw FormatError("checkpoint: bad enum field");
  cfg.readout = static_cast<Readout>(readout);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  if (count != parameter_count(cfg)) {
    throw FormatError("checkpoint: header declares " + std::to_string(count) + " scalars, config implies " +
                      std::to_string(parameter_count(cfg)));
  }

  Checkpoint ckpt{ModelParams::initialize(cfg), static_cast<SelfContext>(self_context)};
  for (Tensor2* t : ckpt.params.tensors()) {
    for (auto& v : t->data()) v = detail::get_le<float>(in, "checkpoint payload");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("checkpoint: trailing bytes");
  return ckpt;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

Checkpoint read_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  auto ckpt = read_checkpoint(path);
  if (!ckpt.params.config.same_architecture(expected)) {
    const auto& got = ckpt.params.config;
    throw ConfigError("checkpoint " + path.string() + " was written for feature_dim=" +
                      std::to_string(got.feature_dim) + " model_dim=" + std::to_string(got.model_dim) +
                      " heads=" + std::to_string(got.heads) + " layers=" + std::to_string(got.layers) +
                      " window=" + std::to_string(got.window) + ", expected feature_dim=" +
                      std::to_string(expected.feature_dim) + " model_dim=" + std::to_string(expected.model_dim) +
                      " heads=" + std::to_string(expected.heads) + " layers=" + std::to_string(expected.layers) +
                      " window=" + std::to_string(expected.window));
  }
  return ckpt;
}

}  // namespace scvad
