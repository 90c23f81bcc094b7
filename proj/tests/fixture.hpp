#pragma once

// The committed desk-scale fixture shared by tests, the acceptance suite and
// the golden CLI run.

#include <string>
#include <vector>

#include "scvad/synthetic.hpp"
#include "scvad/trainer.hpp"
#include "scvad/transformer.hpp"

namespace fixture {

inline constexpr std::uint64_t kSeed = 7;

inline scvad::SynthConfig synth() {
  scvad::SynthConfig c;
  c.dim = 16;
  c.length = 200;
  c.anomaly_spans = {{150, 160}};
  c.anomaly_magnitude = 0.5;
  c.seed = kSeed;
  return c;
}

inline scvad::ModelConfig model() {
  scvad::ModelConfig c;
  c.model_dim = 32;
  c.heads = 2;
  c.layers = 2;
  c.window = 5;
  c.seed = kSeed;
  return c;
}

inline scvad::TrainConfig train() {
  scvad::TrainConfig c;
  c.n_shots = 30;
  c.window = 5;
  c.epochs = 100;
  c.seed = kSeed;
  return c;
}

inline std::vector<std::string> synth_args(const std::string& out) {
  return {"synth", "--output", out, "--dim", "16", "--length", "200", "--span", "150:160",
          "--magnitude", "0.5", "--seed", "7"};
}

inline std::vector<std::string> train_args(const std::string& in, const std::string& out) {
  return {"train", "--input", in, "--output", out, "--n-shots", "30", "--window", "5",
          "--model-dim", "32", "--heads", "2", "--layers", "2", "--epochs", "100", "--seed", "7"};
}

}  // namespace fixture
