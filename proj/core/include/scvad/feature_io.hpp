#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scvad {

inline constexpr std::size_t kDefaultSpatialDim = 512;

// One frame's concatenated spatial + temporal feature vector.
struct FrameFeature {
  std::size_t index = 0;  // 1-based frame position
  std::vector<float> values;

  friend bool operator==(const FrameFeature&, const FrameFeature&) = default;
};

// Optional evaluation metadata stored in the JSON sidecar.
struct StreamMeta {
  std::string source;
  std::optional<double> fps;

  friend bool operator==(const StreamMeta&, const StreamMeta&) = default;
};

// Ordered, dimension-consistent sequence of frame features. Immutable once
// constructed; every invariant is checked by the constructor.
class FeatureStream {
 public:
  FeatureStream() = default;

  // Frames are given as rows; indices are assigned 1..n. Throws
  // DimensionError on ragged rows or a bad spatial split, NonFiniteError on
  // NaN/Inf, ConfigError on a label count mismatch.
  FeatureStream(std::size_t dim, std::size_t spatial_dim,
                std::vector<std::vector<float>> rows,
                std::optional<std::vector<std::uint8_t>> labels = std::nullopt,
                StreamMeta meta = {});

  std::size_t dim() const noexcept { return dim_; }
  std::size_t spatial_dim() const noexcept { return spatial_dim_; }
  std::size_t size() const noexcept { return frames_.size(); }
  bool empty() const noexcept { return frames_.empty(); }

  std::span<const FrameFeature> frames() const noexcept { return frames_; }
  // 1-based access.
  const FrameFeature& frame(std::size_t index) const;

  const std::optional<std::vector<std::uint8_t>>& labels() const noexcept { return labels_; }
  const StreamMeta& meta() const noexcept { return meta_; }

  // Same frames with a different label set / metadata.
  FeatureStream with_labels(std::optional<std::vector<std::uint8_t>> labels) const;

  friend bool operator==(const FeatureStream&, const FeatureStream&) = default;

 private:
  std::size_t dim_ = 0;
  std::size_t spatial_dim_ = 0;
  std::vector<FrameFeature> frames_;
  std::optional<std::vector<std::uint8_t>> labels_;
  StreamMeta meta_;
};

// Spatial entries first, temporal entries after. Throws NonFiniteError with
// the offending position in the concatenated vector.
std::vector<float> concat_features(std::span<const float> spatial, std::span<const float> temporal);

// Binary stream format:
//   "SCVF" | u16 version=1 | u32 frame_count | u32 dim | u32 spatial_dim |
//   frame_count*dim f32, little-endian, row-major.
inline constexpr char kStreamMagic[4] = {'S', 'C', 'V', 'F'};
inline constexpr std::uint16_t kStreamVersion = 1;
inline constexpr std::size_t kStreamHeaderBytes = 4 + 2 + 4 + 4 + 4;

std::size_t write_stream_payload(const FeatureStream& stream, std::ostream& out);
FeatureStream read_stream_payload(std::istream& in);

// `<stem>.meta.json` next to the stream file.
std::filesystem::path sidecar_path(const std::filesystem::path& stream_path);

// Writes the binary file and, when the stream has labels or metadata, the
// sidecar. Returns the number of bytes in the binary file.
std::size_t write_stream(const FeatureStream& stream, const std::filesystem::path& path);
// Reads the binary file and the sidecar if present.
FeatureStream read_stream(const std::filesystem::path& path);

}  // namespace scvad
