#pragma once

#include <filesystem>
#include <string>

#include "scvad/trainer.hpp"

namespace scvad {

// A trained artifact on disk is a directory holding the checkpoint and a JSON
// report with the threshold, loss curve and per-window losses.
inline constexpr const char* kCheckpointFile = "model.scvm";
inline constexpr const char* kReportFile = "train_report.json";

std::string train_report_json(const TrainArtifact& artifact);

void save_artifact(const TrainArtifact& artifact, const std::filesystem::path& directory);
// Throws FormatError on missing or malformed files.
TrainArtifact load_artifact(const std::filesystem::path& directory);

}  // namespace scvad
