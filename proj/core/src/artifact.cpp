#include "scvad/artifact.hpp"

#include <fstream>

#include "json.hpp"
#include "scvad/checkpoint.hpp"
#include "scvad/error.hpp"

namespace scvad {
namespace {

using nlohmann::json;

json model_json(const ModelConfig& c) {
  return {{"feature_dim", c.feature_dim}, {"model_dim", c.model_dim}, {"heads", c.heads},
          {"layers", c.layers},           {"mlp_hidden", c.hidden()}, {"window", c.window},
          {"readout", to_string(c.readout)}, {"seed", c.seed}};
}

json train_json(const TrainConfig& c) {
  return {{"n_shots", c.n_shots}, {"window", c.window},   {"epochs", c.epochs},
          {"lr", c.lr},           {"beta1", c.beta1},     {"beta2", c.beta2},
          {"epsilon", c.epsilon}, {"normalize_inputs", c.normalize_inputs}, {"seed", c.seed}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  c.n_shots = j.at("n_shots").get<std::size_t>();
  c.window = j.at("window").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.normalize_inputs = j.at("normalize_inputs").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string train_report_json(const TrainArtifact& artifact) {
  json report;
  report["threshold"] = artifact.threshold;
  report["last_epoch_running_mean"] = artifact.last_epoch_running_mean;
  report["loss_curve"] = artifact.loss_curve;
  report["per_window_final_losses"] = artifact.per_window_final_losses;
  report["self_context"] = artifact.self_context == SelfContext::kOn;
  report["config"] = {{"model", model_json(artifact.params.config)}, {"train", train_json(artifact.train_config)}};
  if (artifact.normalization) {
    report["normalization"] = {{"mean", artifact.normalization->mean}, {"scale", artifact.normalization->scale}};
  } else {
    report["normalization"] = nullptr;
  }
  return report.dump(2) + "\n";
}

void save_artifact(const TrainArtifact& artifact, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw FormatError("cannot create " + directory.string() + ": " + ec.message());
  write_checkpoint(artifact.params, artifact.self_context, directory / kCheckpointFile);
  std::ofstream out(directory / kReportFile, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + (directory / kReportFile).string() + " for writing");
  out << train_report_json(artifact);
  if (!out) throw FormatError("failed writing " + (directory / kReportFile).string());
}

TrainArtifact load_artifact(const std::filesystem::path& directory) {
  const auto report_path = directory / kReportFile;
  std::ifstream in(report_path);
  if (!in) throw FormatError("cannot open training report " + report_path.string());

  auto ckpt = read_checkpoint(directory / kCheckpointFile);
  TrainArtifact artifact;
  try {
    const json report = json::parse(in);
    artifact.threshold = report.at("threshold").get<double>();
    artifact.last_epoch_running_mean = report.at("last_epoch_running_mean").get<double>();
    artifact.loss_curve = report.at("loss_curve").get<std::vector<double>>();
    artifact.per_window_final_losses = report.at("per_window_final_losses").get<std::vector<double>>();
    artifact.train_config = train_from_json(report.at("config").at("train"));
    const bool self_context = report.at("self_context").get<bool>();
    if (self_context != (ckpt.self_context == SelfContext::kOn)) {
      throw FormatError("training report and checkpoint disagree on self-context");
    }
    const auto& model = report.at("config").at("model");
    if (model.at("feature_dim").get<std::size_t>() != ckpt.params.config.feature_dim ||
        model.at("model_dim").get<std::size_t>() != ckpt.params.config.model_dim ||
        model.at("window").get<std::size_t>() != ckpt.params.config.window) {
      throw FormatError("training report and checkpoint disagree on the model config");
    }
    const auto& norm = report.at("normalization");
    if (!norm.is_null()) {
      Standardizer s;
      s.mean = norm.at("mean").get<std::vector<double>>();
      s.scale = norm.at("scale").get<std::vector<double>>();
      if (s.mean.size() != ckpt.params.config.feature_dim || s.scale.size() != s.mean.size()) {
        throw FormatError("training report: normalization has the wrong dimension");
      }
      artifact.normalization = std::move(s);
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed training report " + report_path.string() + ": " + e.what());
  }
  artifact.params = std::move(ckpt.params);
  artifact.self_context = ckpt.self_context;
  return artifact;
}

}  // namespace scvad
