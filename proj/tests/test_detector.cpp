#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "scvad/detector.hpp"
#include "scvad/error.hpp"
#include "scvad/synthetic.hpp"
#include "scvad/trainer.hpp"
#include "support.hpp"

using namespace scvad;

namespace {

std::vector<bool> flags(const std::string& pattern) {
  std::vector<bool> out;
  for (char c : pattern) out.push_back(c == 'T');
  return out;
}

// Direct transcription of the rule, used as an oracle.
std::vector<bool> consistency_oracle(const std::vector<bool>& raw, std::size_t k, std::size_t q) {
  const long n = static_cast<long>(raw.size());
  std::vector<bool> out(raw.size());
  for (long t = 0; t < n; ++t) {
    long size = 0, count = 0;
    for (long d = -static_cast<long>(k); d <= static_cast<long>(k); ++d) {
      if (d == 0 || t + d < 0 || t + d >= n) continue;
      ++size;
      count += raw[t + d] ? 1 : 0;
    }
    out[t] = raw[t] && count >= std::min<long>(static_cast<long>(q), size);
  }
  return out;
}

struct Trained {
  FeatureStream stream;
  TrainArtifact artifact;
};

const Trained& trained() {
  static const Trained t = [] {
    SynthConfig s;
    s.dim = 6;
    s.length = 70;
    s.anomaly_spans = {{50, 55}};
    s.seed = 4;
    const auto stream = generate_synthetic(s);
    ModelConfig m;
    m.model_dim = 8;
    m.layers = 1;
    m.window = 4;
    m.seed = 1;
    TrainConfig c;
    c.n_shots = 20;
    c.window = 4;
    c.epochs = 10;
    c.seed = 1;
    return Trained{stream, train_few_shot(stream, m, c)};
  }();
  return t;
}

}  // namespace

TEST_SUITE("detector") {

TEST_CASE("all raw flags survive") {
  const auto raw = flags("TTTTTTTT");
  CHECK(temporal_consistency(raw, ConsistencyConfig{2, 2}) == raw);
}

TEST_CASE("an isolated flag is suppressed") {
  CHECK(temporal_consistency(flags("FFFFTFFFF"), ConsistencyConfig{2, 2}) == flags("FFFFFFFFF"));
}

TEST_CASE("five-frame pattern with k=1") {
  CHECK(temporal_consistency(flags("FTTTF"), ConsistencyConfig{1, 1}) == flags("FTTTF"));
  CHECK(temporal_consistency(flags("FTTTF"), ConsistencyConfig{1, 2}) == flags("FFTFF"));
}

TEST_CASE("boundary frames use the truncated neighbourhood") {
  CHECK(temporal_consistency(flags("TTTFF"), ConsistencyConfig{2, 2}) == flags("TTTFF"));
  CHECK(temporal_consistency(flags("TTFFF"), ConsistencyConfig{2, 2}) == flags("FFFFF"));
  CHECK(temporal_consistency(flags("T"), ConsistencyConfig{2, 2}) == flags("T"));
  CHECK(temporal_consistency(flags("TT"), ConsistencyConfig{2, 2}) == flags("TT"));
  CHECK(temporal_consistency(flags("TF"), ConsistencyConfig{2, 2}) == flags("FF"));
}

TEST_CASE("consistency matches the rule on every short pattern") {
  for (std::size_t n = 1; n <= 10; ++n) {
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
      std::vector<bool> raw(n);
      for (std::size_t i = 0; i < n; ++i) raw[i] = (bits >> i) & 1u;
      for (std::size_t k = 1; k <= 3; ++k) {
        for (std::size_t q = 1; q <= 2 * k; ++q) {
          const auto out = temporal_consistency(raw, ConsistencyConfig{k, q});
          CHECK(out == consistency_oracle(raw, k, q));
          for (std::size_t i = 0; i < n; ++i) CHECK((!out[i] || raw[i]));
        }
      }
    }
  }
}

TEST_CASE("consistency parameters are validated") {
  CHECK_THROWS_AS(ConsistencyConfig({2, 0}).validate(), ConfigError);
  CHECK_THROWS_AS(ConsistencyConfig({2, 5}).validate(), ConfigError);
  CHECK_THROWS_AS(ConsistencyConfig({0, 1}).validate(), ConfigError);
  CHECK_NOTHROW(ConsistencyConfig({2, 4}).validate());
}

TEST_CASE("verdict count is length - start + 1") {
  const auto& t = trained();
  for (std::size_t start : {5u, 21u, 40u, 70u, 71u}) {
    ScoreOptions o;
    o.start_index = start;
    const auto v = detect(t.artifact, t.stream, ConsistencyConfig{}, o);
    CHECK(v.size() == t.stream.size() - start + 1);
    if (!v.empty()) CHECK(v.front().frame_index == start);
  }
  CHECK(detect(t.artifact, t.stream, ConsistencyConfig{}).front().frame_index == 21);
}

TEST_CASE("start index bounds and dimension checks") {
  const auto& t = trained();
  ScoreOptions o;
  o.start_index = 4;
  CHECK_THROWS_AS(score_stream(t.artifact, t.stream, o), ConfigError);
  o.start_index = 72;
  CHECK_THROWS_AS(score_stream(t.artifact, t.stream, o), ConfigError);
  SynthConfig s;
  s.dim = 5;
  s.length = 40;
  CHECK_THROWS_AS(score_stream(t.artifact, generate_synthetic(s)), DimensionError);
}

TEST_CASE("zero threshold flags every frame with nonzero error") {
  const auto& t = trained();
  ScoreOptions o;
  o.threshold = 0.0;
  const auto v = score_stream(t.artifact, t.stream, o);
  for (const auto& x : v) {
    CHECK(x.score > 0.0);
    CHECK(x.raw_flag);
  }
}

TEST_CASE("substitution feeds the prediction into the next window") {
  const auto& t = trained();
  for (std::size_t forced : {21u, 30u, 44u}) {
    std::vector<Tensor2> windows(t.stream.size() + 2);
    ScoreOptions o;
    o.threshold = 1e300;
    o.force_flag = [&](std::size_t i) { return i == forced; };
    o.on_window = [&](std::size_t i, const Tensor2& w) { windows[i] = w; };
    const auto v = score_stream(t.artifact, t.stream, o);
    const auto predicted = predict_next(windows[forced], t.artifact.params, t.artifact.self_context);
    const auto& next = windows[forced + 1];
    const auto& actual = t.stream.frame(forced).values;
    for (std::size_t j = 0; j < predicted.size(); ++j) {
      CHECK(next(next.rows() - 1, j) == predicted[j]);
      CHECK(next(next.rows() - 1, j) != static_cast<double>(actual[j]));
    }
    // It stays in the buffer while it slides out.
    const auto& later = windows[forced + 3];
    for (std::size_t j = 0; j < predicted.size(); ++j) CHECK(later(later.rows() - 3, j) == predicted[j]);
    for (const auto& x : v) CHECK(x.raw_flag == (x.frame_index == forced));
  }
}

TEST_CASE("unflagged frames enter the buffer as observed") {
  const auto& t = trained();
  std::vector<Tensor2> windows(t.stream.size() + 2);
  ScoreOptions o;
  o.threshold = 1e300;
  o.on_window = [&](std::size_t i, const Tensor2& w) { windows[i] = w; };
  score_stream(t.artifact, t.stream, o);
  for (std::size_t i = 21; i <= t.stream.size(); ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t j = 0; j < 6; ++j) {
        CHECK(windows[i](k, j) == static_cast<double>(t.stream.frame(i - 4 + k).values[j]));
      }
    }
  }
}

TEST_CASE("used_substitute mirrors the raw flag and final flags are a subset") {
  const auto& t = trained();
  for (const auto& v : detect(t.artifact, t.stream, ConsistencyConfig{})) {
    CHECK(v.used_substitute == v.raw_flag);
    CHECK((!v.final_flag || v.raw_flag));
    CHECK(v.score >= 0.0);
    CHECK(v.raw_flag == (v.score >= t.artifact.threshold));
  }
}

TEST_CASE("raw flags are monotone in the threshold while buffers agree") {
  const auto& t = trained();
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const double lo = t.artifact.threshold * rng.uniform(0.2, 2.0);
    const double hi = lo * rng.uniform(1.0, 3.0);
    ScoreOptions a, b;
    a.threshold = lo;
    b.threshold = hi;
    const auto va = score_stream(t.artifact, t.stream, a), vb = score_stream(t.artifact, t.stream, b);
    for (std::size_t i = 0; i < va.size(); ++i) {
      CHECK(va[i].score == vb[i].score);
      CHECK((!vb[i].raw_flag || va[i].raw_flag));
      if (va[i].raw_flag != vb[i].raw_flag) break;
    }
  }
}

TEST_CASE("detection is deterministic") {
  const auto& t = trained();
  CHECK(detect(t.artifact, t.stream, ConsistencyConfig{}) == detect(t.artifact, t.stream, ConsistencyConfig{}));
}

TEST_CASE("prefix runs agree with the full run") {
  const auto& t = trained();
  const ConsistencyConfig cc{};
  const auto full = detect(t.artifact, t.stream, cc);
  for (std::size_t length : {21u, 25u, 49u, 52u, 60u, 69u}) {
    std::vector<std::vector<float>> rows;
    for (std::size_t i = 1; i <= length; ++i) rows.push_back(t.stream.frame(i).values);
    const FeatureStream prefix(t.stream.dim(), t.stream.spatial_dim(), rows);
    const auto part = detect(t.artifact, prefix, cc);
    REQUIRE(part.size() == length - 20);
    for (std::size_t i = 0; i < part.size(); ++i) {
      CHECK(part[i].score == full[i].score);
      CHECK(part[i].raw_flag == full[i].raw_flag);
      CHECK(part[i].used_substitute == full[i].used_substitute);
      // Final flags look k frames ahead.
      if (part[i].frame_index + cc.half_window <= length) CHECK(part[i] == full[i]);
    }
  }
}

TEST_CASE("verdict CSV round trip") {
  const auto& t = trained();
  const auto v = detect(t.artifact, t.stream, ConsistencyConfig{});
  std::stringstream buf;
  write_verdicts_csv(v, t.artifact.threshold, buf);
  std::string header;
  std::getline(std::istringstream(buf.str()) >> std::ws, header);
  CHECK(header == "frame,score,threshold,raw_flag,final_flag,used_substitute");
  double th = 0.0;
  CHECK(read_verdicts_csv(buf, &th) == v);
  CHECK(th == t.artifact.threshold);
}

TEST_CASE("malformed verdict CSVs are format errors") {
  for (const char* text : {"", "frame,score\n1,2\n", "frame,score,threshold,raw_flag,final_flag,used_substitute\n1,2,3\n",
                           "frame,score,threshold,raw_flag,final_flag,used_substitute\n1,x,3,0,0,0\n",
                           "frame,score,threshold,raw_flag,final_flag,used_substitute\n1,2,3,2,0,0\n"}) {
    std::istringstream in(text);
    CHECK_THROWS_AS(read_verdicts_csv(in), FormatError);
  }
}

}  // TEST_SUITE
