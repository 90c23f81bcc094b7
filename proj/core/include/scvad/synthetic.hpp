#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "scvad/feature_io.hpp"

namespace scvad {

// Inclusive 1-based frame range.
struct FrameSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start + 1; }
  bool contains(std::size_t t) const noexcept { return t >= start && t <= end; }
  friend bool operator==(const FrameSpan&, const FrameSpan&) = default;
};

// Desk-scale stand-in for extracted video features.
//
// Normal frames: every coordinate is a seeded baseline in +-baseline_range
// plus two sinusoids whose periods are drawn from `periods`, with amplitudes
// in [amplitude_min, amplitude_max] and seeded phases, plus Gaussian noise of
// standard deviation `noise_std`. Frames inside an anomaly span are shifted by
// `anomaly_magnitude` along a seeded +/-1 direction.
struct SynthConfig {
  std::size_t dim = 16;
  std::size_t spatial_dim = 0;  // 0 selects dim / 2
  std::size_t length = 200;
  std::vector<FrameSpan> anomaly_spans;
  double anomaly_magnitude = 1.0;
  double noise_std = 0.02;
  double baseline_range = 0.5;
  double amplitude_min = 0.3;
  double amplitude_max = 1.0;
  std::vector<double> periods = {6.0, 8.0, 12.0, 24.0};
  std::uint64_t seed = 0;

  // Throws ConfigError on empty dims, spans outside [1, length], overlapping
  // spans, non-positive magnitude/periods or negative noise.
  void validate() const;
  std::size_t effective_spatial_dim() const noexcept {
    if (spatial_dim != 0) return spatial_dim;
    return dim > 1 ? dim / 2 : dim;
  }
};

// Pure function of the config. Labels mark exactly the anomaly spans.
FeatureStream generate_synthetic(const SynthConfig& config);

}  // namespace scvad
