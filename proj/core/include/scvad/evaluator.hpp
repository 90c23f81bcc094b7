#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scvad/detector.hpp"
#include "scvad/feature_io.hpp"
#include "scvad/trainer.hpp"
#include "scvad/transformer.hpp"

namespace scvad {

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

// Probability that a random anomalous frame outscores a random normal one,
// ties counted one half. Throws ConfigError when lengths differ or only one
// class is present.
double frame_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Thresholds swept from +inf through every distinct score down to -inf; a
// frame is predicted anomalous when score >= threshold.
std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Trapezoidal area under (fpr, tpr).
double roc_area(std::span<const RocPoint> points);

struct AblationSpec {
  bool use_spatial = true;
  bool use_temporal = true;
  bool self_context = true;

  // Throws ConfigError when both feature families are disabled.
  void validate() const;
  std::string name() const;
};

// The four rows of the feature / self-context ablation: temporal only,
// spatial only, no self-context, full model.
std::vector<AblationSpec> standard_ablation();

// Drops the disabled family's coordinates; the spatial family is the prefix
// of length spatial_dim.
FeatureStream project_features(const FeatureStream& stream, const AblationSpec& spec);

struct AblationSettings {
  ModelConfig model;  // feature_dim is set per cell
  TrainConfig train;
  ConsistencyConfig consistency;
  bool parallel = true;
};

struct AblationRow {
  AblationSpec spec;
  std::size_t feature_dim = 0;
  double threshold = 0.0;
  double auc = 0.0;
};

// Full train + detect + AUC for each ablation cell, all cells sharing the same seeds.
// Requires labels on the stream.
std::vector<AblationRow> run_ablation(const FeatureStream& stream, std::span<const AblationSpec> specs,
                                      const AblationSettings& settings);

void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out);
void write_ablation_text(std::span<const AblationRow> rows, std::ostream& out);

// Scores and labels of the evaluated frames.
struct ScoredFrames {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};
ScoredFrames scored_frames(const std::vector<Verdict>& verdicts, const FeatureStream& stream);

// Final-flag counts over the evaluated frames, split by label.
struct DetectionRates {
  std::size_t anomalous = 0;
  std::size_t normal = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;

  // 0 when the class is absent.
  double recall() const noexcept;
  double false_positive_rate() const noexcept;
};
// Throws ConfigError when the stream has no labels.
DetectionRates detection_rates(const std::vector<Verdict>& verdicts, const FeatureStream& stream);

// CSV writers; formats:
//   scores.csv      frame,score
//   loss_curve.csv  epoch,mean_loss
//   roc.csv         threshold,fpr,tpr
void write_score_trace_csv(const std::vector<Verdict>& verdicts, std::ostream& out);
void write_loss_curve_csv(std::span<const double> loss_curve, std::ostream& out);
void write_roc_csv(std::span<const RocPoint> points, std::ostream& out);
std::vector<RocPoint> read_roc_csv(std::istream& in);

struct EmittedCurves {
  std::filesystem::path scores;
  std::filesystem::path loss_curve;
  std::filesystem::path roc;  // empty when the stream has no usable labels
  std::optional<double> auc;
};

// Writes scores.csv, loss_curve.csv and, when both classes are labelled,
// roc.csv into `directory`.
EmittedCurves emit_curves(const TrainArtifact& artifact, const std::vector<Verdict>& verdicts,
                          const FeatureStream& stream, const std::filesystem::path& directory);

}  // namespace scvad
