#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "scvad/feature_io.hpp"
#include "scvad/tensor.hpp"
#include "scvad/transformer.hpp"

namespace scvad {

struct TrainConfig {
  std::size_t n_shots = 50;
  std::size_t window = 10;
  std::size_t epochs = 100;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-8;
  bool normalize_inputs = false;
  std::uint64_t seed = 0;

  // Throws ConfigError unless n_shots >= window + 1 and epochs >= 1.
  void validate() const;
};

// T consecutive frames and the frame that follows them.
struct Window {
  Tensor2 inputs;              // T x D
  std::vector<double> target;  // D
  std::size_t target_index = 0;
};

// Per-coordinate affine standardisation fitted on the training frames.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const FeatureStream& stream, std::size_t first_n);
  std::vector<double> apply(std::span<const float> values) const;
  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

struct TrainArtifact {
  ModelParams params;
  SelfContext self_context = SelfContext::kOn;
  TrainConfig train_config;
  double threshold = 0.0;
  std::vector<double> loss_curve;
  std::vector<double> per_window_final_losses;
  // Mean of the final epoch's running losses (alternative threshold reading).
  double last_epoch_running_mean = 0.0;
  std::optional<Standardizer> normalization;
};

// Windows i = 1..N-T over frames 1..N: inputs F_i..F_{i+T-1}, target F_{i+T}.
// Throws ConfigError when N < T + 1 or the stream holds fewer than N frames.
std::vector<Window> make_windows(const FeatureStream& stream, std::size_t n_shots, std::size_t window,
                                 const Standardizer* normalization = nullptr);

// (1/D) * sum (actual - pred)^2. Throws DimensionError on length mismatch.
double mse_loss(std::span<const double> predicted, std::span<const double> actual);

// Mean window loss under frozen weights, summed in window order. Optionally
// returns each window's loss. Throws ConfigError for an empty window list.
double compute_threshold(const ModelParams& params, std::span<const Window> windows,
                         SelfContext self_context, std::vector<double>* per_window = nullptr);

struct TrainProgress {
  std::size_t epoch;  // 1-based
  double mean_loss;
  std::span<const std::size_t> order;  // window indices in update order
};

// One-class few-shot fit on the first N frames: a seeded shuffle of all
// windows per epoch, one Adam update per window. Weights are rounded to f32
// after the last epoch, then the threshold is the mean loss over all windows.
// Throws TrainingError on a non-finite loss.
TrainArtifact train_few_shot(const FeatureStream& stream, const ModelConfig& model_config,
                             const TrainConfig& train_config, SelfContext self_context = SelfContext::kOn,
                             const std::function<void(const TrainProgress&)>& on_epoch = {});

}  // namespace scvad
