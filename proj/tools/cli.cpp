#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scvad/artifact.hpp"
#include "scvad/detector.hpp"
#include "scvad/error.hpp"
#include "scvad/evaluator.hpp"
#include "scvad/feature_io.hpp"
#include "scvad/synthetic.hpp"
#include "scvad/trainer.hpp"

#ifndef SCVAD_VERSION
#define SCVAD_VERSION "unknown"
#endif

namespace scvad::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Outputs are written to a hidden staging directory next to their final
// location and moved into place only once the command has succeeded.
class Staging {
 public:
  Staging(fs::path destination, fs::path staging) : destination_(std::move(destination)), dir_(std::move(staging)) {
    std::error_code ec;
    fs::remove_all(dir_, ec);
    fs::create_directories(dir_, ec);
    if (ec) throw FormatError("cannot create " + dir_.string() + ": " + ec.message());
  }
  Staging(const Staging&) = delete;
  Staging& operator=(const Staging&) = delete;
  ~Staging() {
    std::error_code ec;
    if (!committed_) fs::remove_all(dir_, ec);
  }

  const fs::path& dir() const noexcept { return dir_; }
  fs::path file(const std::string& name) const { return dir_ / name; }
  fs::path final_path(const std::string& name) const { return destination_ / name; }

  // Final paths of everything staged so far, sorted.
  std::vector<fs::path> outputs() const {
    std::vector<fs::path> names;
    for (const auto& entry : fs::directory_iterator(dir_)) names.push_back(destination_ / entry.path().filename());
    std::sort(names.begin(), names.end());
    return names;
  }

  void commit() {
    std::error_code ec;
    fs::create_directories(destination_, ec);
    if (ec) throw FormatError("cannot create " + destination_.string() + ": " + ec.message());
    std::vector<fs::path> staged;
    for (const auto& entry : fs::directory_iterator(dir_)) staged.push_back(entry.path());
    std::sort(staged.begin(), staged.end());
    for (const auto& path : staged) {
      fs::rename(path, destination_ / path.filename(), ec);
      if (ec) throw FormatError("cannot move " + path.string() + " into place: " + ec.message());
    }
    fs::remove(dir_, ec);
    committed_ = true;
  }

 private:
  fs::path destination_;
  fs::path dir_;
  bool committed_ = false;
};

fs::path strip_trailing_separator(fs::path p) {
  p = p.lexically_normal();
  if (p.filename().empty() && p.has_parent_path()) p = p.parent_path();
  return p;
}

fs::path parent_or_current(const fs::path& p) {
  return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

Staging stage_directory(const fs::path& output) {
  const fs::path dir = strip_trailing_separator(output);
  if (dir.empty() || dir == ".") throw UsageError("--output must name a directory other than '.'");
  return Staging(dir, parent_or_current(dir) / ("." + dir.filename().string() + ".staging"));
}

Staging stage_file(const fs::path& output) {
  if (output.filename().empty()) throw UsageError("--output must name a file");
  return Staging(parent_or_current(output), parent_or_current(output) / ("." + output.filename().string() + ".staging"));
}

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  std::replace(text.begin(), text.end(), '\r', ' ');
  std::replace(text.begin(), text.end(), '"', '\'');
  return text;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

// Effective value of every option of a subcommand, after flags and config
// file have been applied.
json config_echo(const CLI::App& sub) {
  json echo = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help") continue;
    const bool is_flag = opt->get_expected_max() == 0;
    std::string value;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
    } else if (is_flag) {
      value = "false";
    } else {
      value = opt->get_default_str();
    }
    echo[names.front()] = value;
  }
  return echo;
}

struct Manifest {
  std::string command;
  json config;
  std::optional<std::uint64_t> seed;
  json inputs = json::object();
};

void write_manifest(const Manifest& m, Staging& staging, const std::string& name,
                    std::chrono::steady_clock::time_point started) {
  json j;
  j["command"] = m.command;
  j["tool_version"] = SCVAD_VERSION;
  j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  std::vector<std::string> outputs;
  for (const auto& p : staging.outputs()) outputs.push_back(p.generic_string());
  outputs.push_back(staging.final_path(name).generic_string());
  std::sort(outputs.begin(), outputs.end());
  j["outputs"] = outputs;
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
  j["duration_seconds"] = elapsed.count();
  std::ofstream out(staging.file(name), std::ios::trunc);
  if (!out) throw FormatError("cannot write manifest " + staging.file(name).string());
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("cannot write manifest " + staging.file(name).string());
}

template <class Writer>
void write_text(const fs::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  writer(out);
  out.flush();
  if (!out) throw FormatError("write failed: " + path.string());
}

FrameSpan parse_span(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--span expects START:END, got '" + text + "'");
  try {
    std::size_t used_a = 0, used_b = 0;
    const std::string a = text.substr(0, colon), b = text.substr(colon + 1);
    const auto start = std::stoull(a, &used_a);
    const auto end = std::stoull(b, &used_b);
    if (used_a != a.size() || used_b != b.size() || start > end) throw std::invalid_argument("span");
    return {static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
  } catch (const std::logic_error&) {
    throw UsageError("--span expects START:END with START <= END, got '" + text + "'");
  }
}

// Options shared by train and ablate.
struct TrainOptions {
  std::uint64_t seed = 0;
  std::size_t n_shots = 50;
  std::size_t window = 10;
  std::size_t epochs = 100;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.98;
  std::size_t model_dim = 512;
  std::size_t heads = 2;
  std::size_t layers = 2;
  std::size_t mlp_hidden = 0;
  std::string readout = "last";
  bool normalize = false;

  void add_to(CLI::App& sub) {
    sub.add_option("--seed", seed, "Seed for initialisation and window shuffling");
    sub.add_option("--n-shots", n_shots, "Initial normal frames used for training (N)");
    sub.add_option("--window", window, "Input window length (T)");
    sub.add_option("--epochs", epochs, "Training epochs");
    sub.add_option("--lr", lr, "Adam learning rate");
    sub.add_option("--beta1", beta1, "Adam beta1");
    sub.add_option("--beta2", beta2, "Adam beta2");
    sub.add_option("--model-dim", model_dim, "Transformer width");
    sub.add_option("--heads", heads, "Attention heads");
    sub.add_option("--layers", layers, "Encoder and decoder layers");
    sub.add_option("--mlp-hidden", mlp_hidden, "MLP hidden width (0: twice the model width)");
    sub.add_option("--readout", readout, "Decoder readout")->check(CLI::IsMember({"last", "mean"}));
    sub.add_flag("--normalize", normalize, "Standardise inputs with statistics of the first N frames");
  }

  ModelConfig model() const {
    ModelConfig c;
    c.model_dim = model_dim;
    c.heads = heads;
    c.layers = layers;
    c.mlp_hidden = mlp_hidden;
    c.window = window;
    c.readout = readout == "mean" ? Readout::kMeanPool : Readout::kLastPosition;
    c.seed = seed;
    return c;
  }

  TrainConfig train() const {
    TrainConfig c;
    c.n_shots = n_shots;
    c.window = window;
    c.epochs = epochs;
    c.lr = lr;
    c.beta1 = beta1;
    c.beta2 = beta2;
    c.normalize_inputs = normalize;
    c.seed = seed;
    return c;
  }
};

struct ConsistencyOptions {
  std::size_t k = 2;
  std::size_t q = 2;

  void add_to(CLI::App& sub) {
    sub.add_option("--consistency-k", k, "Neighbourhood half-width");
    sub.add_option("--consistency-q", q, "Flagged neighbours required to keep a flag");
  }
  ConsistencyConfig config() const {
    ConsistencyConfig c{k, q};
    c.validate();
    return c;
  }
};

struct Context {
  std::ostream& out;
  std::chrono::steady_clock::time_point started;
};

struct SynthCommand {
  std::string output;
  SynthConfig config;
  std::vector<std::string> spans;

  void add_to(CLI::App& sub) {
    sub.add_option("--output,-o", output, "Stream file to write")->required();
    sub.add_option("--seed", config.seed, "Generator seed");
    sub.add_option("--dim", config.dim, "Feature dimension");
    sub.add_option("--spatial-dim", config.spatial_dim, "Leading spatial coordinates (0: half of dim)");
    sub.add_option("--length", config.length, "Frame count");
    sub.add_option("--span", spans, "Anomalous frames START:END, 1-based inclusive (repeatable)");
    sub.add_option("--magnitude", config.anomaly_magnitude, "Anomaly shift per coordinate");
    sub.add_option("--noise", config.noise_std, "Noise standard deviation");
    sub.add_option("--baseline", config.baseline_range, "Per-coordinate offsets drawn from +-baseline");
    sub.add_option("--amp-min", config.amplitude_min, "Smallest sinusoid amplitude");
    sub.add_option("--amp-max", config.amplitude_max, "Largest sinusoid amplitude");
    sub.add_option("--periods", config.periods, "Candidate sinusoid periods in frames");
  }

  void run(const CLI::App& sub, Context& ctx) {
    config.anomaly_spans.clear();
    for (const auto& s : spans) config.anomaly_spans.push_back(parse_span(s));
    const FeatureStream stream = generate_synthetic(config);

    const fs::path path(output);
    Staging staging = stage_file(path);
    write_stream(stream, staging.file(path.filename().string()));
    Manifest m{"synth", config_echo(sub), config.seed, json::object()};
    write_manifest(m, staging, path.stem().string() + ".manifest.json", ctx.started);
    staging.commit();
    ctx.out << "wrote " << stream.size() << " frames of dim " << stream.dim() << " to " << path.string() << '\n';
  }
};

struct TrainCommand {
  std::string input, output;
  TrainOptions options;
  bool no_self_context = false;
  bool verbose = false;

  void add_to(CLI::App& sub) {
    sub.add_option("--input,-i", input, "Feature stream")->required();
    sub.add_option("--output,-o", output, "Artifact directory")->required();
    options.add_to(sub);
    sub.add_flag("--no-self-context", no_self_context, "Disable the decoder's self-context input");
    sub.add_flag("--verbose,-v", verbose, "Print the mean loss of every epoch");
  }

  void run(const CLI::App& sub, Context& ctx) {
    const TrainConfig train = options.train();
    train.validate();
    ModelConfig model = options.model();
    // Reject bad architecture flags before touching the input.
    model.feature_dim = 1;
    model.validate();
    model.feature_dim = 0;

    const FeatureStream stream = read_stream(input);
    const auto sc = no_self_context ? SelfContext::kOff : SelfContext::kOn;
    const auto artifact = train_few_shot(stream, model, train, sc, [&](const TrainProgress& p) {
      if (verbose) ctx.out << "epoch " << p.epoch << " mean_loss " << format_double(p.mean_loss) << '\n';
    });

    Staging staging = stage_directory(output);
    save_artifact(artifact, staging.dir());
    write_text(staging.file("loss_curve.csv"), [&](std::ostream& o) { write_loss_curve_csv(artifact.loss_curve, o); });
    Manifest m{"train", config_echo(sub), options.seed, {{"stream", input}}};
    write_manifest(m, staging, "manifest.json", ctx.started);
    staging.commit();
    ctx.out << "threshold " << format_double(artifact.threshold) << " after " << train.epochs << " epochs\n";
  }
};

struct DetectCommand {
  std::string input, model, output;
  ConsistencyOptions consistency;
  std::size_t start_index = 0;
  double threshold = 0.0;
  CLI::Option* threshold_option = nullptr;

  void add_to(CLI::App& sub) {
    sub.add_option("--input,-i", input, "Feature stream")->required();
    sub.add_option("--model,-m", model, "Artifact directory written by train")->required();
    sub.add_option("--output,-o", output, "Verdict CSV to write")->required();
    consistency.add_to(sub);
    sub.add_option("--start-index", start_index, "First scored frame, 1-based (0: N + 1)");
    threshold_option = sub.add_option("--threshold", threshold, "Override the trained threshold");
  }

  void run(const CLI::App& sub, Context& ctx) {
    const ConsistencyConfig cc = consistency.config();
    const TrainArtifact artifact = load_artifact(model);
    const FeatureStream stream = read_stream(input);
    ScoreOptions so;
    if (start_index != 0) so.start_index = start_index;
    if (threshold_option->count() > 0) so.threshold = threshold;
    const auto verdicts = detect(artifact, stream, cc, so);
    const double th = so.threshold.value_or(artifact.threshold);

    const fs::path path(output);
    Staging staging = stage_file(path);
    write_text(staging.file(path.filename().string()), [&](std::ostream& o) { write_verdicts_csv(verdicts, th, o); });
    Manifest m{"detect", config_echo(sub), artifact.train_config.seed, {{"stream", input}, {"model", model}}};
    write_manifest(m, staging, path.stem().string() + ".manifest.json", ctx.started);
    staging.commit();
    const auto raw = std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.raw_flag; });
    const auto fin = std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.final_flag; });
    ctx.out << verdicts.size() << " frames scored, " << raw << " raw flags, " << fin << " final flags\n";
  }
};

struct EvalCommand {
  std::string input, model, verdicts_path, output;

  void add_to(CLI::App& sub) {
    sub.add_option("--input,-i", input, "Labelled feature stream")->required();
    sub.add_option("--model,-m", model, "Artifact directory written by train")->required();
    sub.add_option("--verdicts", verdicts_path, "Verdict CSV written by detect")->required();
    sub.add_option("--output,-o", output, "Directory for scores, curves and metrics")->required();
  }

  void run(const CLI::App& sub, Context& ctx) {
    const TrainArtifact artifact = load_artifact(model);
    const FeatureStream stream = read_stream(input);
    std::ifstream vin(verdicts_path);
    if (!vin) throw FormatError("cannot open " + verdicts_path);
    double threshold = 0.0;
    const auto verdicts = read_verdicts_csv(vin, &threshold);

    Staging staging = stage_directory(output);
    const auto curves = emit_curves(artifact, verdicts, stream, staging.dir());
    json metrics;
    metrics["frames"] = verdicts.size();
    metrics["threshold"] = threshold;
    metrics["auc"] = curves.auc ? json(*curves.auc) : json(nullptr);
    if (stream.labels()) {
      const auto rates = detection_rates(verdicts, stream);
      metrics["anomalous"] = rates.anomalous;
      metrics["normal"] = rates.normal;
      metrics["true_positives"] = rates.true_positives;
      metrics["false_positives"] = rates.false_positives;
      metrics["recall"] = rates.recall();
      metrics["false_positive_rate"] = rates.false_positive_rate();
    }
    write_text(staging.file("metrics.json"), [&](std::ostream& o) { o << metrics.dump(2) << '\n'; });
    Manifest m{"eval", config_echo(sub), artifact.train_config.seed,
               {{"stream", input}, {"model", model}, {"verdicts", verdicts_path}}};
    write_manifest(m, staging, "manifest.json", ctx.started);
    staging.commit();
    if (curves.auc) {
      ctx.out << "auc " << format_double(*curves.auc) << '\n';
    } else {
      ctx.out << "auc unavailable (stream lacks both classes)\n";
    }
  }
};

struct AblateCommand {
  std::string input, output;
  TrainOptions options;
  ConsistencyOptions consistency;

  void add_to(CLI::App& sub) {
    sub.add_option("--input,-i", input, "Labelled feature stream")->required();
    sub.add_option("--output,-o", output, "Directory for the ablation table")->required();
    options.add_to(sub);
    consistency.add_to(sub);
  }

  void run(const CLI::App& sub, Context& ctx) {
    AblationSettings settings;
    settings.train = options.train();
    settings.train.validate();
    settings.model = options.model();
    settings.consistency = consistency.config();
    const FeatureStream stream = read_stream(input);
    const auto specs = standard_ablation();
    const auto rows = run_ablation(stream, specs, settings);

    Staging staging = stage_directory(output);
    write_text(staging.file("ablation.csv"), [&](std::ostream& o) { write_ablation_csv(rows, o); });
    write_text(staging.file("ablation.txt"), [&](std::ostream& o) { write_ablation_text(rows, o); });
    Manifest m{"ablate", config_echo(sub), options.seed, {{"stream", input}}};
    write_manifest(m, staging, "manifest.json", ctx.started);
    staging.commit();
    write_ablation_text(rows, ctx.out);
  }
};

void report(std::ostream& err, const char* kind, const std::string& message) {
  err << "scvad: error: kind=" << kind << " message=\"" << one_line(message) << "\"\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot self-context transformer for video anomaly detection", "scvad"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML/INI file with option defaults; flags take precedence");
  app.set_version_flag("--version", std::string(SCVAD_VERSION));
  app.require_subcommand(1);

  SynthCommand synth;
  TrainCommand train;
  DetectCommand detect_cmd;
  EvalCommand eval;
  AblateCommand ablate;
  auto* synth_sub = app.add_subcommand("synth", "Generate a synthetic feature stream");
  auto* train_sub = app.add_subcommand("train", "Fit the predictor on the first N frames");
  auto* detect_sub = app.add_subcommand("detect", "Score a stream and write per-frame verdicts");
  auto* eval_sub = app.add_subcommand("eval", "Frame-level AUC, ROC and score curves");
  auto* ablate_sub = app.add_subcommand("ablate", "Feature-family and self-context ablation");
  synth.add_to(*synth_sub);
  train.add_to(*train_sub);
  detect_cmd.add_to(*detect_sub);
  eval.add_to(*eval_sub);
  ablate.add_to(*ablate_sub);

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("scvad");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report(err, "usage", e.what());
    return kExitUsage;
  }

  Context ctx{out, std::chrono::steady_clock::now()};
  try {
    if (synth_sub->parsed()) synth.run(*synth_sub, ctx);
    if (train_sub->parsed()) train.run(*train_sub, ctx);
    if (detect_sub->parsed()) detect_cmd.run(*detect_sub, ctx);
    if (eval_sub->parsed()) eval.run(*eval_sub, ctx);
    if (ablate_sub->parsed()) ablate.run(*ablate_sub, ctx);
  } catch (const UsageError& e) {
    report(err, "usage", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    report(err, "usage", e.what());
    return kExitUsage;
  } catch (const TrainingError& e) {
    report(err, "runtime", e.what());
    return kExitRuntime;
  } catch (const Error& e) {
    report(err, "data", e.what());
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    report(err, "data", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    report(err, "internal", e.what());
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace scvad::cli
