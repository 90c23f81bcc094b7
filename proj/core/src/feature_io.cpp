#include "scvad/feature_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "scvad/error.hpp"

namespace scvad {
namespace {

using nlohmann::json;

void check_finite(std::span<const float> values, std::size_t offset, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << what << ": non-finite value at position " << (offset + i);
      throw NonFiniteError(msg.str(), offset + i);
    }
  }
}

}  // namespace

FeatureStream::FeatureStream(std::size_t dim, std::size_t spatial_dim,
                             std::vector<std::vector<float>> rows,
                             std::optional<std::vector<std::uint8_t>> labels, StreamMeta meta)
    : dim_(dim), spatial_dim_(spatial_dim), labels_(std::move(labels)), meta_(std::move(meta)) {
  if (dim_ == 0) throw DimensionError("feature stream: dim must be positive");
  if (spatial_dim_ == 0 || spatial_dim_ > dim_) {
    throw DimensionError("feature stream: spatial_dim " + std::to_string(spatial_dim_) +
                         " outside [1, " + std::to_string(dim_) + "]");
  }
  frames_.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim_) {
      throw DimensionError("feature stream: frame " + std::to_string(i + 1) + " has " +
                           std::to_string(rows[i].size()) + " values, expected " + std::to_string(dim_));
    }
    const std::string what = "feature stream frame " + std::to_string(i + 1);
    check_finite(rows[i], 0, what.c_str());
    frames_.push_back(FrameFeature{i + 1, std::move(rows[i])});
  }
  if (labels_) {
    if (labels_->size() != frames_.size()) {
      throw ConfigError("feature stream: " + std::to_string(labels_->size()) + " labels for " +
                        std::to_string(frames_.size()) + " frames");
    }
    for (auto label : *labels_) {
      if (label > 1) throw ConfigError("feature stream: labels must be 0 or 1");
    }
  }
}

const FrameFeature& FeatureStream::frame(std::size_t index) const {
  if (index == 0 || index > frames_.size()) {
    throw ConfigError("frame index " + std::to_string(index) + " outside [1, " +
                      std::to_string(frames_.size()) + "]");
  }
  return frames_[index - 1];
}

FeatureStream FeatureStream::with_labels(std::optional<std::vector<std::uint8_t>> labels) const {
  std::vector<std::vector<float>> rows;
  rows.reserve(frames_.size());
  for (const auto& f : frames_) rows.push_back(f.values);
  return FeatureStream(dim_, spatial_dim_, std::move(rows), std::move(labels), meta_);
}

std::vector<float> concat_features(std::span<const float> spatial, std::span<const float> temporal) {
  check_finite(spatial, 0, "concat_features spatial");
  check_finite(temporal, spatial.size(), "concat_features temporal");
  std::vector<float> out;
  out.reserve(spatial.size() + temporal.size());
  out.insert(out.end(), spatial.begin(), spatial.end());
  out.insert(out.end(), temporal.begin(), temporal.end());
  return out;
}

std::size_t write_stream_payload(const FeatureStream& stream, std::ostream& out) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (stream.size() > kMax || stream.dim() > kMax) throw ConfigError("stream too large for format");
  out.write(kStreamMagic, 4);
  detail::put_le<std::uint16_t>(out, kStreamVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stream.size()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stream.dim()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stream.spatial_dim()));
  for (const auto& frame : stream.frames()) {
    for (float v : frame.values) detail::put_le<float>(out, v);
  }
  if (!out) throw FormatError("failed writing stream payload");
  return kStreamHeaderBytes + stream.size() * stream.dim() * sizeof(float);
}

FeatureStream read_stream_payload(std::istream& in) {
  detail::expect_magic(in, kStreamMagic, "feature stream");
  const auto version = detail::get_le<std::uint16_t>(in, "stream version");
  if (version != kStreamVersion) {
    throw FormatError("unsupported feature stream version " + std::to_string(version));
  }
  const auto frame_count = detail::get_le<std::uint32_t>(in, "frame count");
  const auto dim = detail::get_le<std::uint32_t>(in, "dim");
  const auto spatial_dim = detail::get_le<std::uint32_t>(in, "spatial_dim");
  if (dim == 0) throw FormatError("feature stream header: dim is zero");
  if (spatial_dim == 0 || spatial_dim > dim) throw FormatError("feature stream header: bad spatial_dim");

  std::vector<std::vector<float>> rows(frame_count, std::vector<float>(dim));
  for (std::uint32_t r = 0; r < frame_count; ++r) {
    for (std::uint32_t c = 0; c < dim; ++c) {
      try {
        rows[r][c] = detail::get_le<float>(in, "frame payload");
      } catch (const FormatError&) {
        throw FormatError("truncated feature stream: frame " + std::to_string(r + 1) + " of " +
                          std::to_string(frame_count) + " ends after " + std::to_string(c) + " of " +
                          std::to_string(dim) + " values");
      }
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("feature stream: trailing bytes after payload (header dim disagrees with rows?)");
  }
  try {
    return FeatureStream(dim, spatial_dim, std::move(rows));
  } catch (const NonFiniteError& e) {
    throw FormatError(std::string("feature stream: ") + e.what());
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& stream_path) {
  auto p = stream_path;
  p.replace_extension(".meta.json");
  return p;
}

std::size_t write_stream(const FeatureStream& stream, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  const auto bytes = write_stream_payload(stream, out);
  out.close();
  if (!out) throw FormatError("failed writing " + path.string());

  const auto& meta = stream.meta();
  if (stream.labels() || !meta.source.empty() || meta.fps) {
    json sidecar;
    sidecar["labels"] = stream.labels() ? json(*stream.labels()) : json::array();
    sidecar["source"] = meta.source;
    sidecar["fps"] = meta.fps ? json(*meta.fps) : json(nullptr);
    std::ofstream side(sidecar_path(path), std::ios::trunc);
    if (!side) throw FormatError("cannot open " + sidecar_path(path).string() + " for writing");
    side << sidecar.dump(1) << '\n';
  }
  return bytes;
}

FeatureStream read_stream(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature stream " + path.string());
  FeatureStream stream = read_stream_payload(in);

  const auto side = sidecar_path(path);
  if (!std::filesystem::exists(side)) return stream;

  std::ifstream side_in(side);
  json sidecar;
  try {
    sidecar = json::parse(side_in);
  } catch (const json::exception& e) {
    throw FormatError("malformed sidecar " + side.string() + ": " + e.what());
  }
  std::optional<std::vector<std::uint8_t>> labels;
  StreamMeta meta;
  try {
    if (sidecar.contains("labels") && !sidecar["labels"].empty()) {
      labels = sidecar["labels"].get<std::vector<std::uint8_t>>();
    }
    if (sidecar.contains("source")) meta.source = sidecar["source"].get<std::string>();
    if (sidecar.contains("fps") && !sidecar["fps"].is_null()) meta.fps = sidecar["fps"].get<double>();
  } catch (const json::exception& e) {
    throw FormatError("malformed sidecar " + side.string() + ": " + e.what());
  }
  std::vector<std::vector<float>> rows;
  rows.reserve(stream.size());
  for (const auto& f : stream.frames()) rows.push_back(f.values);
  try {
    return FeatureStream(stream.dim(), stream.spatial_dim(), std::move(rows), std::move(labels),
                         std::move(meta));
  } catch (const ConfigError& e) {
    throw FormatError("sidecar " + side.string() + ": " + e.what());
  }
}

}  // namespace scvad
