#include "scvad/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "scvad/error.hpp"
#include "scvad/random.hpp"

namespace scvad {

void SynthConfig::validate() const {
  if (dim == 0) throw ConfigError("synth: dim must be positive");
  if (length == 0) throw ConfigError("synth: length must be positive");
  if (effective_spatial_dim() > dim) throw ConfigError("synth: spatial_dim exceeds dim");
  if (!(anomaly_magnitude > 0.0) || !std::isfinite(anomaly_magnitude)) {
    throw ConfigError("synth: anomaly magnitude must be positive");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ConfigError("synth: noise std must be >= 0");
  if (!(baseline_range >= 0.0) || !std::isfinite(baseline_range)) {
    throw ConfigError("synth: baseline range must be >= 0");
  }
  if (!(amplitude_min >= 0.0) || !(amplitude_max >= amplitude_min) || !std::isfinite(amplitude_max)) {
    throw ConfigError("synth: amplitude range must satisfy 0 <= min <= max");
  }
  if (periods.empty()) throw ConfigError("synth: at least one period is required");
  for (double p : periods) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("synth: periods must be positive");
  }
  auto spans = anomaly_spans;
  std::sort(spans.begin(), spans.end(), [](const FrameSpan& a, const FrameSpan& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.start < 1 || s.end < s.start || s.end > length) {
      throw ConfigError("synth: anomaly span (" + std::to_string(s.start) + "," + std::to_string(s.end) +
                        ") outside [1, " + std::to_string(length) + "]");
    }
    if (i > 0 && s.start <= spans[i - 1].end) throw ConfigError("synth: anomaly spans overlap");
  }
}

FeatureStream generate_synthetic(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);

  struct Component {
    double period, amplitude, phase;
  };
  std::vector<std::array<Component, 2>> components(config.dim);
  std::vector<double> offsets(config.dim);
  std::vector<double> direction(config.dim);
  for (std::size_t c = 0; c < config.dim; ++c) {
    for (auto& comp : components[c]) {
      comp.period = config.periods[rng.below(config.periods.size())];
      comp.amplitude = rng.uniform(config.amplitude_min, config.amplitude_max);
      comp.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    offsets[c] = rng.uniform(-config.baseline_range, config.baseline_range);
    direction[c] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  }

  std::vector<std::vector<float>> rows(config.length, std::vector<float>(config.dim));
  std::vector<std::uint8_t> labels(config.length, 0);
  for (std::size_t t = 1; t <= config.length; ++t) {
    const bool anomalous = std::any_of(config.anomaly_spans.begin(), config.anomaly_spans.end(),
                                       [t](const FrameSpan& s) { return s.contains(t); });
    labels[t - 1] = anomalous ? 1 : 0;
    auto& row = rows[t - 1];
    for (std::size_t c = 0; c < config.dim; ++c) {
      double x = offsets[c];
      for (const auto& comp : components[c]) {
        x += comp.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / comp.period + comp.phase);
      }
      x += config.noise_std * rng.normal();
      if (anomalous) x += config.anomaly_magnitude * direction[c];
      row[c] = static_cast<float>(x);
    }
  }

  StreamMeta meta;
  meta.source = "synthetic:seed=" + std::to_string(config.seed);
  return FeatureStream(config.dim, config.effective_spatial_dim(), std::move(rows), std::move(labels),
                       std::move(meta));
}

}  // namespace scvad
