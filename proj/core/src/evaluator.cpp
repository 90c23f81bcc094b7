#include "scvad/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "scvad/error.hpp"
#include "scvad/parallel.hpp"

namespace scvad {
namespace {

struct ClassCounts {
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
};

ClassCounts check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ConfigError("auc: " + std::to_string(scores.size()) + " scores for " + std::to_string(labels.size()) +
                      " labels");
  }
  ClassCounts counts;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw ConfigError("auc: NaN score at position " + std::to_string(i));
    if (labels[i] > 1) throw ConfigError("auc: labels must be 0 or 1");
    if (labels[i]) {
      ++counts.positives;
    } else {
      ++counts.negatives;
    }
  }
  if (counts.positives == 0 || counts.negatives == 0) {
    throw ConfigError("auc: undefined, labels contain a single class");
  }
  return counts;
}

// Indices ordered by score; ties keep input order.
std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return order;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

double frame_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto counts = check_inputs(scores, labels);
  const auto order = order_by_score(scores, false);
  // Twice the Mann-Whitney count: a win is 2, a tie is 1.
  std::uint64_t doubled_wins = 0;
  std::uint64_t negatives_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]]) {
        ++pos;
      } else {
        ++neg;
      }
      ++j;
    }
    doubled_wins += 2 * pos * negatives_below + pos * neg;
    negatives_below += neg;
    i = j;
  }
  return static_cast<double>(doubled_wins) / static_cast<double>(2 * counts.positives * counts.negatives);
}

std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto counts = check_inputs(scores, labels);
  const auto order = order_by_score(scores, true);
  const double p = static_cast<double>(counts.positives);
  const double n = static_cast<double>(counts.negatives);
  std::vector<RocPoint> points;
  points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]]) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    points.push_back({threshold, static_cast<double>(tp) / p, static_cast<double>(fp) / n});
  }
  points.push_back({-std::numeric_limits<double>::infinity(), 1.0, 1.0});
  return points;
}

double roc_area(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
  }
  return area;
}

void AblationSpec::validate() const {
  if (!use_spatial && !use_temporal) throw ConfigError("ablation: at least one feature family must be enabled");
}

std::string AblationSpec::name() const {
  std::string features = use_spatial && use_temporal ? "spatial+temporal" : (use_spatial ? "spatial" : "temporal");
  return features + (self_context ? "/self-context" : "/no-self-context");
}

std::vector<AblationSpec> standard_ablation() {
  return {
      {false, true, true},  // temporal only
      {true, false, true},  // spatial only
      {true, true, false},  // no self-context
      {true, true, true},   // full model
  };
}

FeatureStream project_features(const FeatureStream& stream, const AblationSpec& spec) {
  spec.validate();
  if (spec.use_spatial && spec.use_temporal) return stream;
  const std::size_t split = stream.spatial_dim();
  const std::size_t begin = spec.use_spatial ? 0 : split;
  const std::size_t end = spec.use_spatial ? split : stream.dim();
  if (begin == end) throw ConfigError("ablation: stream has no temporal features to keep");
  std::vector<std::vector<float>> rows;
  rows.reserve(stream.size());
  for (const auto& f : stream.frames()) {
    rows.emplace_back(f.values.begin() + static_cast<std::ptrdiff_t>(begin),
                      f.values.begin() + static_cast<std::ptrdiff_t>(end));
  }
  // A single-family stream has no split, so spatial_dim spans the whole vector.
  const std::size_t dim = end - begin;
  return FeatureStream(dim, dim, std::move(rows), stream.labels(), stream.meta());
}

ScoredFrames scored_frames(const std::vector<Verdict>& verdicts, const FeatureStream& stream) {
  if (!stream.labels()) throw ConfigError("evaluation requires frame labels");
  ScoredFrames out;
  out.scores.reserve(verdicts.size());
  out.labels.reserve(verdicts.size());
  for (const auto& v : verdicts) {
    if (v.frame_index == 0 || v.frame_index > stream.size()) {
      throw ConfigError("verdict for frame " + std::to_string(v.frame_index) + " outside the stream");
    }
    out.scores.push_back(v.score);
    out.labels.push_back((*stream.labels())[v.frame_index - 1]);
  }
  return out;
}

double DetectionRates::recall() const noexcept {
  return anomalous == 0 ? 0.0 : static_cast<double>(true_positives) / static_cast<double>(anomalous);
}

double DetectionRates::false_positive_rate() const noexcept {
  return normal == 0 ? 0.0 : static_cast<double>(false_positives) / static_cast<double>(normal);
}

DetectionRates detection_rates(const std::vector<Verdict>& verdicts, const FeatureStream& stream) {
  const auto scored = scored_frames(verdicts, stream);
  DetectionRates rates;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (scored.labels[i]) {
      ++rates.anomalous;
      if (verdicts[i].final_flag) ++rates.true_positives;
    } else {
      ++rates.normal;
      if (verdicts[i].final_flag) ++rates.false_positives;
    }
  }
  return rates;
}

std::vector<AblationRow> run_ablation(const FeatureStream& stream, std::span<const AblationSpec> specs,
                                      const AblationSettings& settings) {
  if (!stream.labels()) throw ConfigError("ablation requires frame labels");
  for (const auto& spec : specs) spec.validate();

  std::vector<AblationRow> rows(specs.size());
  auto run_cell = [&](std::size_t i) {
    const auto& spec = specs[i];
    const FeatureStream projected = project_features(stream, spec);
    ModelConfig model = settings.model;
    model.feature_dim = projected.dim();
    const auto self_context = spec.self_context ? SelfContext::kOn : SelfContext::kOff;
    const auto artifact = train_few_shot(projected, model, settings.train, self_context);
    const auto verdicts = detect(artifact, projected, settings.consistency);
    const auto scored = scored_frames(verdicts, projected);
    rows[i] = AblationRow{spec, projected.dim(), artifact.threshold, frame_auc(scored.scores, scored.labels)};
  };

  if (settings.parallel && thread_count() > 1 && specs.size() > 1) {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          run_cell(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t i = 0; i < specs.size(); ++i) run_cell(i);
  }
  return rows;
}

void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out) {
  out << "model,spatial,temporal,self_context,feature_dim,threshold,auc\n";
  for (const auto& r : rows) {
    out << r.spec.name() << ',' << int(r.spec.use_spatial) << ',' << int(r.spec.use_temporal) << ','
        << int(r.spec.self_context) << ',' << r.feature_dim << ',' << format_double(r.threshold) << ','
        << format_double(r.auc) << '\n';
  }
}

void write_ablation_text(std::span<const AblationRow> rows, std::ostream& out) {
  std::size_t name_width = 5;
  for (const auto& r : rows) name_width = std::max(name_width, r.spec.name().size());
  auto mark = [](bool b) { return b ? "yes" : "no"; };
  std::ostringstream s;
  s << std::left << std::setw(static_cast<int>(name_width)) << "model" << "  spatial  temporal  self-ctx  "
    << std::right << std::setw(6) << "dim" << "  " << std::setw(8) << "AUC%" << '\n';
  for (const auto& r : rows) {
    s << std::left << std::setw(static_cast<int>(name_width)) << r.spec.name() << "  " << std::setw(7)
      << mark(r.spec.use_spatial) << "  " << std::setw(8) << mark(r.spec.use_temporal) << "  " << std::setw(8)
      << mark(r.spec.self_context) << "  " << std::right << std::setw(6) << r.feature_dim << "  "
      << std::setw(8) << std::fixed << std::setprecision(2) << 100.0 * r.auc << '\n';
    s.unsetf(std::ios::fixed);
  }
  out << s.str();
}

void write_score_trace_csv(const std::vector<Verdict>& verdicts, std::ostream& out) {
  out << "frame,score\n";
  for (const auto& v : verdicts) out << v.frame_index << ',' << format_double(v.score) << '\n';
}

void write_loss_curve_csv(std::span<const double> loss_curve, std::ostream& out) {
  out << "epoch,mean_loss\n";
  for (std::size_t i = 0; i < loss_curve.size(); ++i) out << (i + 1) << ',' << format_double(loss_curve[i]) << '\n';
}

void write_roc_csv(std::span<const RocPoint> points, std::ostream& out) {
  out << "threshold,fpr,tpr\n";
  for (const auto& p : points) {
    out << format_double(p.threshold) << ',' << format_double(p.fpr) << ',' << format_double(p.tpr) << '\n';
  }
}

std::vector<RocPoint> read_roc_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "threshold,fpr,tpr") throw FormatError("roc CSV: bad header");
  std::vector<RocPoint> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',')) {
      throw FormatError("roc CSV: expected 3 fields");
    }
    try {
      points.push_back({std::stod(a), std::stod(c), std::stod(b)});
    } catch (const std::exception&) {
      throw FormatError("roc CSV: bad number in '" + line + "'");
    }
  }
  return points;
}

EmittedCurves emit_curves(const TrainArtifact& artifact, const std::vector<Verdict>& verdicts,
                          const FeatureStream& stream, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw FormatError("cannot create " + directory.string() + ": " + ec.message());

  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw FormatError("cannot open " + p.string() + " for writing");
    return out;
  };

  EmittedCurves emitted;
  emitted.scores = directory / "scores.csv";
  {
    auto out = open(emitted.scores);
    write_score_trace_csv(verdicts, out);
  }
  emitted.loss_curve = directory / "loss_curve.csv";
  {
    auto out = open(emitted.loss_curve);
    write_loss_curve_csv(artifact.loss_curve, out);
  }
  if (stream.labels() && !verdicts.empty()) {
    const auto scored = scored_frames(verdicts, stream);
    const bool both = std::count(scored.labels.begin(), scored.labels.end(), 1) > 0 &&
                      std::count(scored.labels.begin(), scored.labels.end(), 0) > 0;
    if (both) {
      emitted.roc = directory / "roc.csv";
      auto out = open(emitted.roc);
      write_roc_csv(roc_points(scored.scores, scored.labels), out);
      emitted.auc = frame_auc(scored.scores, scored.labels);
    }
  }
  return emitted;
}

}  // namespace scvad
