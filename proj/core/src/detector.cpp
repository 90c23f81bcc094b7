#include "scvad/detector.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "scvad/error.hpp"

namespace scvad {

void ConsistencyConfig::validate() const {
  if (min_neighbors == 0) throw ConfigError("consistency: q must be at least 1");
  if (min_neighbors > 2 * half_window) {
    throw ConfigError("consistency: q=" + std::to_string(min_neighbors) + " exceeds 2k=" +
                      std::to_string(2 * half_window));
  }
}

std::vector<Verdict> score_stream(const TrainArtifact& artifact, const FeatureStream& stream,
                                  const ScoreOptions& options) {
  const auto& cfg = artifact.params.config;
  const std::size_t window = cfg.window;
  const std::size_t start = options.start_index.value_or(artifact.train_config.n_shots + 1);
  if (start <= window) {
    throw ConfigError("score_stream: start index " + std::to_string(start) + " leaves fewer than T=" +
                      std::to_string(window) + " frames of history");
  }
  if (start > stream.size() + 1) {
    throw ConfigError("score_stream: start index " + std::to_string(start) + " beyond stream of " +
                      std::to_string(stream.size()) + " frames");
  }
  if (stream.dim() != cfg.feature_dim) {
    throw DimensionError("score_stream: stream dim " + std::to_string(stream.dim()) + " differs from model dim " +
                         std::to_string(cfg.feature_dim));
  }
  const double threshold = options.threshold.value_or(artifact.threshold);

  auto features = [&](std::size_t t) {
    const auto& v = stream.frame(t).values;
    return artifact.normalization ? artifact.normalization->apply(v) : std::vector<double>(v.begin(), v.end());
  };

  std::deque<std::vector<double>> buffer;
  for (std::size_t t = start - window; t < start; ++t) buffer.push_back(features(t));

  std::vector<Verdict> verdicts;
  verdicts.reserve(stream.size() + 1 - start);
  Tensor2 inputs(window, cfg.feature_dim);
  for (std::size_t t = start; t <= stream.size(); ++t) {
    for (std::size_t k = 0; k < window; ++k) std::copy(buffer[k].begin(), buffer[k].end(), inputs.row(k).begin());
    if (options.on_window) options.on_window(t, inputs);

    auto predicted = predict_next(inputs, artifact.params, artifact.self_context);
    auto actual = features(t);
    Verdict v;
    v.frame_index = t;
    v.score = mse_loss(predicted, actual);
    v.raw_flag = v.score >= threshold || (options.force_flag && options.force_flag(t));
    v.used_substitute = v.raw_flag;
    verdicts.push_back(v);

    buffer.pop_front();
    buffer.push_back(v.raw_flag ? std::move(predicted) : std::move(actual));
  }
  return verdicts;
}

std::vector<bool> temporal_consistency(const std::vector<bool>& raw_flags, const ConsistencyConfig& config) {
  config.validate();
  const std::size_t n = raw_flags.size();
  const std::size_t k = config.half_window;
  std::vector<bool> out(n, false);
  for (std::size_t t = 0; t < n; ++t) {
    if (!raw_flags[t]) continue;
    const std::size_t lo = t >= k ? t - k : 0;
    const std::size_t hi = std::min(n - 1, t + k);
    std::size_t neighbors = 0;
    std::size_t flagged = 0;
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j == t) continue;
      ++neighbors;
      if (raw_flags[j]) ++flagged;
    }
    out[t] = flagged >= std::min(config.min_neighbors, neighbors);
  }
  return out;
}

std::vector<Verdict> detect(const TrainArtifact& artifact, const FeatureStream& stream,
                            const ConsistencyConfig& consistency, const ScoreOptions& options) {
  consistency.validate();
  auto verdicts = score_stream(artifact, stream, options);
  if (verdicts.empty()) return verdicts;
  std::vector<bool> raw(verdicts.size());
  for (std::size_t i = 0; i < verdicts.size(); ++i) raw[i] = verdicts[i].raw_flag;
  const auto final_flags = temporal_consistency(raw, consistency);
  for (std::size_t i = 0; i < verdicts.size(); ++i) verdicts[i].final_flag = final_flags[i];
  return verdicts;
}

void write_verdicts_csv(const std::vector<Verdict>& verdicts, double threshold, std::ostream& out) {
  out << "frame,score,threshold,raw_flag,final_flag,used_substitute\n";
  std::ostringstream th;
  th << std::setprecision(17) << threshold;
  const std::string th_text = th.str();
  for (const auto& v : verdicts) {
    std::ostringstream line;
    line << std::setprecision(17) << v.frame_index << ',' << v.score << ',' << th_text << ','
         << int(v.raw_flag) << ',' << int(v.final_flag) << ',' << int(v.used_substitute) << '\n';
    out << line.str();
  }
}

namespace {

bool parse_flag(const std::string& field, std::size_t line) {
  if (field == "0") return false;
  if (field == "1") return true;
  throw FormatError("verdict CSV line " + std::to_string(line) + ": flag must be 0 or 1");
}

}  // namespace

std::vector<Verdict> read_verdicts_csv(std::istream& in, double* threshold) {
  std::string line;
  if (!std::getline(in, line) || line != "frame,score,threshold,raw_flag,final_flag,used_substitute") {
    throw FormatError("verdict CSV: missing or unexpected header");
  }
  std::vector<Verdict> verdicts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6) {
      throw FormatError("verdict CSV line " + std::to_string(line_no) + ": expected 6 fields");
    }
    Verdict v;
    try {
      v.frame_index = std::stoull(fields[0]);
      v.score = std::stod(fields[1]);
      if (threshold) *threshold = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw FormatError("verdict CSV line " + std::to_string(line_no) + ": bad number");
    }
    v.raw_flag = parse_flag(fields[3], line_no);
    v.final_flag = parse_flag(fields[4], line_no);
    v.used_substitute = parse_flag(fields[5], line_no);
    verdicts.push_back(v);
  }
  return verdicts;
}

}  // namespace scvad
