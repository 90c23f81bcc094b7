#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "fixture.hpp"
#include "json.hpp"
#include "scvad/parallel.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = scvad::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string golden_auc() {
  std::ifstream in(fs::path(SCVAD_GOLDEN_DIR) / "fixture_auc.txt");
  std::string line;
  std::getline(in, line);
  return line;
}

// synth -> train -> detect -> eval on the committed fixture, inside `dir`.
void pipeline(const fs::path& dir) {
  const auto stream = (dir / "fixture.scvf").string();
  const auto model = (dir / "model").string();
  const auto verdicts = (dir / "verdicts.csv").string();
  REQUIRE(run(fixture::synth_args(stream)).code == 0);
  REQUIRE(run(fixture::train_args(stream, model)).code == 0);
  REQUIRE(run({"detect", "-i", stream, "-m", model, "-o", verdicts}).code == 0);
  REQUIRE(run({"eval", "-i", stream, "-m", model, "--verdicts", verdicts, "-o", (dir / "eval").string()}).code == 0);
}

std::vector<fs::path> files_under(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// File contents with the manifests' wall-clock field removed.
std::string normalized(const fs::path& p) {
  if (p.string().ends_with("manifest.json")) {
    auto j = json::parse(support::slurp(p));
    j.erase("duration_seconds");
    return j.dump();
  }
  return support::slurp(p);
}

std::map<fs::path, std::string> snapshot(const fs::path& dir) {
  std::map<fs::path, std::string> out;
  for (const auto& f : files_under(dir)) out[f] = normalized(dir / f);
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fixture pipeline reproduces the golden AUC") {
  support::TempDir dir("cli");
  pipeline(dir.path());
  const auto metrics = json::parse(support::slurp(dir / "eval/metrics.json"));
  std::ostringstream printed;
  printed << std::setprecision(17) << metrics["auc"].get<double>();
  CHECK(printed.str() == golden_auc());
  CHECK(metrics["frames"] == 170);
  CHECK(metrics["anomalous"] == 11);
  CHECK(metrics["normal"] == 159);

  for (const char* name : {"model/model.scvm", "model/train_report.json", "model/loss_curve.csv",
                           "model/manifest.json", "fixture.meta.json", "fixture.manifest.json",
                           "verdicts.manifest.json", "eval/scores.csv", "eval/roc.csv", "eval/loss_curve.csv",
                           "eval/manifest.json"}) {
    CAPTURE(name);
    CHECK(fs::exists(dir / name));
  }
  const auto manifest = json::parse(support::slurp(dir / "model/manifest.json"));
  CHECK(manifest["command"] == "train");
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["config"]["epochs"] == "100");
  CHECK(manifest["config"]["no-self-context"] == "false");
  CHECK(manifest.contains("tool_version"));
  CHECK(manifest.contains("duration_seconds"));
  CHECK(manifest["outputs"].size() == 4);
}

TEST_CASE("reruns and thread counts give identical outputs") {
  support::TempDir dir("cli");
  std::vector<std::map<fs::path, std::string>> runs;
  for (std::size_t threads : {1u, 1u, 4u}) {
    scvad::set_thread_count(threads);
    pipeline(dir.path());
    runs.push_back(snapshot(dir.path()));
    for (const auto& e : fs::directory_iterator(dir.path())) fs::remove_all(e.path());
  }
  scvad::set_thread_count(0);
  CHECK(runs[0] == runs[1]);
  CHECK(runs[0] == runs[2]);
  CHECK(runs[0].size() >= 14);
}

TEST_CASE("missing input exits 3 and writes nothing") {
  support::TempDir dir("cli");
  const auto r = run({"train", "-i", (dir / "absent.scvf").string(), "-o", (dir / "model").string()});
  CHECK(r.code == 3);
  CHECK(r.err.starts_with("scvad: error: kind=data message=\""));
  CHECK(files_under(dir.path()).empty());
  CHECK_FALSE(fs::exists(dir / "model"));
}

TEST_CASE("too few frames for the window exits 2") {
  support::TempDir dir("cli");
  const auto stream = (dir / "s.scvf").string();
  REQUIRE(run(fixture::synth_args(stream)).code == 0);
  const auto r = run({"train", "-i", stream, "-o", (dir / "m").string(), "--n-shots", "5", "--window", "10"});
  CHECK(r.code == 2);
  CHECK(r.err.starts_with("scvad: error: kind=usage"));
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK_FALSE(fs::exists(dir / "m"));
}

TEST_CASE("unknown flags and missing subcommands are usage errors") {
  CHECK(run({}).code == 2);
  CHECK(run({"train", "--bogus"}).code == 2);
  CHECK(run({"detect", "-i", "x"}).code == 2);
  CHECK(run({"train", "-i", "x", "-o", "y", "--readout", "middle"}).code == 2);
  CHECK(run({"train", "-i", "x", "-o", "y", "--heads", "3", "--model-dim", "32"}).code == 2);
}

TEST_CASE("a detect start past the stream end writes an empty verdict file") {
  support::TempDir dir("cli");
  const auto stream = (dir / "s.scvf").string();
  REQUIRE(run({"synth", "-o", stream, "--length", "40", "--dim", "4", "--seed", "1"}).code == 0);
  REQUIRE(run({"train", "-i", stream, "-o", (dir / "m").string(), "--n-shots", "20", "--window", "3",
               "--epochs", "2", "--model-dim", "8", "--heads", "1", "--layers", "1"})
              .code == 0);
  const auto r = run({"detect", "-i", stream, "-m", (dir / "m").string(), "-o", (dir / "v.csv").string(),
                      "--start-index", "41"});
  CHECK(r.code == 0);
  std::istringstream csv(support::slurp(dir / "v.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 1);
  CHECK(run({"detect", "-i", stream, "-m", (dir / "m").string(), "-o", (dir / "w.csv").string(),
             "--start-index", "42"})
            .code == 2);
}

TEST_CASE("flags override the config file") {
  support::TempDir dir("cli");
  const auto stream = (dir / "s.scvf").string();
  REQUIRE(run({"synth", "-o", stream, "--length", "40", "--dim", "4", "--seed", "1"}).code == 0);
  std::ofstream(dir / "run.toml") << "[train]\nepochs = 3\nmodel-dim = 16\nheads = 2\nlayers = 1\n";
  const auto r = run({"--config", (dir / "run.toml").string(), "train", "-i", stream, "-o", (dir / "m").string(),
                      "--n-shots", "20", "--window", "3", "--epochs", "2"});
  REQUIRE(r.code == 0);
  const auto manifest = json::parse(support::slurp(dir / "m/manifest.json"));
  CHECK(manifest["config"]["epochs"] == "2");
  CHECK(manifest["config"]["model-dim"] == "16");
  CHECK(r.out.find("after 2 epochs") != std::string::npos);
}

TEST_CASE("ablate writes the four-row table") {
  support::TempDir dir("cli");
  const auto stream = (dir / "s.scvf").string();
  REQUIRE(run({"synth", "-o", stream, "--length", "60", "--dim", "6", "--span", "45:50", "--seed", "2"}).code == 0);
  const auto r = run({"ablate", "-i", stream, "-o", (dir / "ab").string(), "--n-shots", "15", "--window", "3",
                      "--epochs", "3", "--model-dim", "8", "--heads", "2", "--layers", "1"});
  REQUIRE(r.code == 0);
  std::istringstream csv(support::slurp(dir / "ab/ablation.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 5);
  CHECK(fs::exists(dir / "ab/ablation.txt"));
  CHECK(fs::exists(dir / "ab/manifest.json"));
}

TEST_CASE("version flag") {
  const auto r = run({"--version"});
  CHECK(r.code == 0);
  CHECK_FALSE(r.out.empty());
}

}  // TEST_SUITE
