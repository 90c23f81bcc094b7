#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "scvad/feature_io.hpp"
#include "scvad/tensor.hpp"
#include "scvad/trainer.hpp"

namespace scvad {

struct Verdict {
  std::size_t frame_index = 0;
  double score = 0.0;
  bool raw_flag = false;
  bool final_flag = false;
  bool used_substitute = false;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

// A raw flag survives when at least q of the frames within distance k (the
// frame itself excluded) are also raw-flagged.
struct ConsistencyConfig {
  std::size_t half_window = 2;
  std::size_t min_neighbors = 2;

  // Throws ConfigError unless 1 <= q <= 2k.
  void validate() const;
};

struct ScoreOptions {
  // First evaluated frame (1-based). Defaults to n_shots + 1.
  std::optional<std::size_t> start_index;
  // Replaces the artifact's threshold.
  std::optional<double> threshold;
  // Sees the T x D input window used to score each frame.
  std::function<void(std::size_t frame_index, const Tensor2& window)> on_window;
  // Forces raw_flag for the given frames regardless of score.
  std::function<bool(std::size_t frame_index)> force_flag;
};

// Sequential scoring from start_index to the end of the stream. The rolling
// input buffer holds the actual features of unflagged frames and the
// predicted features of flagged ones. final_flag is left false.
// Throws ConfigError when start_index <= T or start_index > size + 1, and
// DimensionError on a feature-dimension mismatch with the model.
std::vector<Verdict> score_stream(const TrainArtifact& artifact, const FeatureStream& stream,
                                  const ScoreOptions& options = {});

std::vector<bool> temporal_consistency(const std::vector<bool>& raw_flags,
                                       const ConsistencyConfig& config);

// score_stream followed by temporal_consistency.
std::vector<Verdict> detect(const TrainArtifact& artifact, const FeatureStream& stream,
                            const ConsistencyConfig& consistency, const ScoreOptions& options = {});

// Header: frame,score,threshold,raw_flag,final_flag,used_substitute
void write_verdicts_csv(const std::vector<Verdict>& verdicts, double threshold, std::ostream& out);
// Throws FormatError on a malformed file.
std::vector<Verdict> read_verdicts_csv(std::istream& in, double* threshold = nullptr);

}  // namespace scvad
