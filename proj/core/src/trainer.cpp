#include "scvad/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "scvad/adam.hpp"
#include "scvad/error.hpp"
#include "scvad/graph.hpp"
#include "scvad/random.hpp"

namespace scvad {

void TrainConfig::validate() const {
  if (window == 0) throw ConfigError("train: window must be at least 1");
  if (n_shots < window + 1) {
    throw ConfigError("train: n_shots " + std::to_string(n_shots) + " must be at least window + 1 = " +
                      std::to_string(window + 1));
  }
  if (epochs == 0) throw ConfigError("train: epochs must be at least 1");
  AdamConfig{lr, beta1, beta2, epsilon}.validate();
}

Standardizer Standardizer::fit(const FeatureStream& stream, std::size_t first_n) {
  if (first_n == 0 || first_n > stream.size()) throw ConfigError("standardizer: bad frame count");
  const std::size_t dim = stream.dim();
  Standardizer s;
  s.mean.assign(dim, 0.0);
  s.scale.assign(dim, 0.0);
  for (std::size_t t = 1; t <= first_n; ++t) {
    const auto& v = stream.frame(t).values;
    for (std::size_t c = 0; c < dim; ++c) s.mean[c] += v[c];
  }
  for (auto& m : s.mean) m /= static_cast<double>(first_n);
  for (std::size_t t = 1; t <= first_n; ++t) {
    const auto& v = stream.frame(t).values;
    for (std::size_t c = 0; c < dim; ++c) s.scale[c] += (v[c] - s.mean[c]) * (v[c] - s.mean[c]);
  }
  for (auto& sc : s.scale) {
    sc = std::sqrt(sc / static_cast<double>(first_n));
    if (!(sc > 1e-12)) sc = 1.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const float> values) const {
  if (values.size() != mean.size()) throw DimensionError("standardizer: dimension mismatch");
  std::vector<double> out(values.size());
  for (std::size_t c = 0; c < values.size(); ++c) out[c] = (values[c] - mean[c]) / scale[c];
  return out;
}

std::vector<Window> make_windows(const FeatureStream& stream, std::size_t n_shots, std::size_t window,
                                 const Standardizer* normalization) {
  if (window == 0) throw ConfigError("make_windows: window must be at least 1");
  if (n_shots < window + 1) {
    throw ConfigError("make_windows: N=" + std::to_string(n_shots) + " is smaller than T+1=" +
                      std::to_string(window + 1));
  }
  if (stream.size() < n_shots) {
    throw ConfigError("make_windows: stream has " + std::to_string(stream.size()) + " frames, need N=" +
                      std::to_string(n_shots));
  }
  auto row_of = [&](std::size_t t) {
    const auto& v = stream.frame(t).values;
    return normalization ? normalization->apply(v) : std::vector<double>(v.begin(), v.end());
  };
  std::vector<Window> windows;
  windows.reserve(n_shots - window);
  for (std::size_t i = 1; i + window <= n_shots; ++i) {
    Window w;
    w.inputs = Tensor2(window, stream.dim());
    for (std::size_t k = 0; k < window; ++k) {
      const auto row = row_of(i + k);
      std::copy(row.begin(), row.end(), w.inputs.row(k).begin());
    }
    w.target = row_of(i + window);
    w.target_index = i + window;
    windows.push_back(std::move(w));
  }
  return windows;
}

double mse_loss(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw DimensionError("mse_loss: lengths " + std::to_string(predicted.size()) + " and " +
                         std::to_string(actual.size()) + " differ");
  }
  if (predicted.empty()) throw DimensionError("mse_loss: empty vectors");
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = actual[i] - predicted[i];
    total += d * d;
  }
  return total / static_cast<double>(predicted.size());
}

double compute_threshold(const ModelParams& params, std::span<const Window> windows, SelfContext self_context,
                         std::vector<double>* per_window) {
  if (windows.empty()) throw ConfigError("compute_threshold: no windows");
  std::vector<double> losses;
  losses.reserve(windows.size());
  for (const auto& w : windows) {
    losses.push_back(mse_loss(predict_next(w.inputs, params, self_context), w.target));
  }
  const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
  if (per_window) *per_window = std::move(losses);
  return mean;
}

TrainArtifact train_few_shot(const FeatureStream& stream, const ModelConfig& model_config,
                             const TrainConfig& train_config, SelfContext self_context,
                             const std::function<void(const TrainProgress&)>& on_epoch) {
  train_config.validate();
  ModelConfig cfg = model_config;
  if (cfg.feature_dim == 0) cfg.feature_dim = stream.dim();
  if (cfg.feature_dim != stream.dim()) {
    throw DimensionError("train: model feature_dim " + std::to_string(cfg.feature_dim) +
                         " differs from stream dim " + std::to_string(stream.dim()));
  }
  if (cfg.window != train_config.window) {
    throw ConfigError("train: model window " + std::to_string(cfg.window) + " differs from training window " +
                      std::to_string(train_config.window));
  }
  cfg.validate();

  TrainArtifact artifact;
  artifact.self_context = self_context;
  artifact.train_config = train_config;
  if (train_config.normalize_inputs) artifact.normalization = Standardizer::fit(stream, train_config.n_shots);
  const auto windows = make_windows(stream, train_config.n_shots, train_config.window,
                                    artifact.normalization ? &*artifact.normalization : nullptr);

  ModelParams params = ModelParams::initialize(cfg);
  const auto tensors = params.tensors();
  std::vector<const Tensor2*> const_tensors(tensors.begin(), tensors.end());
  AdamState adam = AdamState::for_parameters(
      const_tensors, AdamConfig{train_config.lr, train_config.beta1, train_config.beta2, train_config.epsilon});

  Rng shuffle_rng(train_config.seed);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Tensor2> grads(tensors.size());

  artifact.loss_curve.reserve(train_config.epochs);
  for (std::size_t epoch = 1; epoch <= train_config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double epoch_total = 0.0;
    for (std::size_t iteration = 0; iteration < order.size(); ++iteration) {
      const Window& w = windows[order[iteration]];
      Graph graph;
      TransformerGraph model(graph, params);
      const NodeId prediction = model.predict_next(graph.constant(w.inputs), self_context);
      const NodeId target = graph.constant(Tensor2::row_vector(std::span<const double>(w.target)));
      const NodeId loss = graph.mean_square(prediction, target);
      const double value = graph.value(loss)(0, 0);
      if (!std::isfinite(value)) {
        throw TrainingError("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                                ", iteration " + std::to_string(iteration + 1),
                            epoch, iteration + 1);
      }
      epoch_total += value;
      auto gradients = graph.backward(loss);
      const auto nodes = model.parameter_nodes();
      for (std::size_t k = 0; k < nodes.size(); ++k) grads[k] = gradients.take(nodes[k]);
      adam_step(tensors, grads, adam);
    }
    const double mean_loss = epoch_total / static_cast<double>(order.size());
    artifact.loss_curve.push_back(mean_loss);
    if (on_epoch) on_epoch(TrainProgress{epoch, mean_loss, order});
  }

  artifact.last_epoch_running_mean = artifact.loss_curve.back();
  params.round_to_float();
  artifact.threshold = compute_threshold(params, windows, self_context, &artifact.per_window_final_losses);
  if (!std::isfinite(artifact.threshold)) {
    throw TrainingError("training diverged: non-finite threshold", train_config.epochs, 0);
  }
  artifact.params = std::move(params);
  return artifact;
}

}  // namespace scvad
