#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "scvad/error.hpp"
#include "scvad/feature_io.hpp"
#include "scvad/random.hpp"
#include "scvad/synthetic.hpp"
#include "support.hpp"

using namespace scvad;

namespace {

FeatureStream small_stream() {
  return FeatureStream(4, 2, {{1.f, 2.f, 3.f, 4.f}, {0.5f, -0.25f, 1e-7f, 3.4e38f}, {-1.f, 0.f, 7.f, 9.f}},
                       std::vector<std::uint8_t>{0, 1, 0}, StreamMeta{"unit", 25.0});
}

void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& s, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(s, bits);
}

std::string header(std::uint32_t frames, std::uint32_t dim, std::uint32_t spatial) {
  std::string s = "SCVF";
  put_u16(s, 1);
  put_u32(s, frames);
  put_u32(s, dim);
  put_u32(s, spatial);
  return s;
}

}  // namespace

TEST_SUITE("feature_io") {

TEST_CASE("concat puts spatial entries first") {
  const std::vector<float> spatial{1, 2}, temporal{3, 4, 5};
  CHECK(concat_features(spatial, temporal) == std::vector<float>{1, 2, 3, 4, 5});
}

TEST_CASE("concat of zero vectors has dimension 512 + K") {
  for (std::size_t k : {1u, 16u, 49u}) {
    const std::vector<float> spatial(512, 0.f), temporal(k, 0.f);
    const auto out = concat_features(spatial, temporal);
    CHECK(out.size() == 512 + k);
    CHECK(std::all_of(out.begin(), out.end(), [](float v) { return v == 0.f; }));
  }
}

TEST_CASE("concat rejects non-finite entries with their position") {
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const float inf = std::numeric_limits<float>::infinity();
  try {
    concat_features(std::vector<float>{1, nan}, std::vector<float>{3});
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(e.position() == 1);
  }
  try {
    concat_features(std::vector<float>{1, 2}, std::vector<float>{3, inf});
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(e.position() == 3);
  }
}

TEST_CASE("stream constructor enforces invariants") {
  CHECK_THROWS_AS(FeatureStream(0, 0, {}), DimensionError);
  CHECK_THROWS_AS(FeatureStream(3, 4, {{1, 2, 3}}), DimensionError);
  CHECK_THROWS_AS(FeatureStream(3, 1, {{1, 2, 3}, {1, 2}}), DimensionError);
  CHECK_THROWS_AS(FeatureStream(2, 1, {{1, std::numeric_limits<float>::quiet_NaN()}}), NonFiniteError);
  CHECK_THROWS_AS(FeatureStream(2, 1, {{1, 2}}, std::vector<std::uint8_t>{0, 1}), ConfigError);
  CHECK_THROWS_AS(FeatureStream(2, 1, {{1, 2}}, std::vector<std::uint8_t>{2}), ConfigError);
}

TEST_CASE("frames are indexed from one") {
  const auto s = small_stream();
  CHECK(s.frame(1).index == 1);
  CHECK(s.frame(3).values == std::vector<float>{-1, 0, 7, 9});
  CHECK_THROWS_AS(s.frame(0), ConfigError);
  CHECK_THROWS_AS(s.frame(4), ConfigError);
}

TEST_CASE("payload round trip is bit exact") {
  const auto s = small_stream();
  std::stringstream buf;
  const auto bytes = write_stream_payload(s, buf);
  CHECK(bytes == kStreamHeaderBytes + 3 * 4 * 4);
  const auto back = read_stream_payload(buf);
  CHECK(back.dim() == 4);
  CHECK(back.spatial_dim() == 2);
  REQUIRE(back.size() == 3);
  for (std::size_t t = 1; t <= 3; ++t) {
    CHECK(std::memcmp(back.frame(t).values.data(), s.frame(t).values.data(), 16) == 0);
  }
}

TEST_CASE("file round trip keeps labels and metadata in the sidecar") {
  support::TempDir dir("fio");
  const auto path = dir / "clip.scvf";
  const auto s = small_stream();
  const auto bytes = write_stream(s, path);
  CHECK(bytes == std::filesystem::file_size(path));
  CHECK(std::filesystem::exists(dir / "clip.meta.json"));
  CHECK(read_stream(path) == s);
}

TEST_CASE("unlabelled stream writes no sidecar") {
  support::TempDir dir("fio");
  const FeatureStream s(2, 1, {{1, 2}, {3, 4}});
  write_stream(s, dir / "plain.scvf");
  CHECK_FALSE(std::filesystem::exists(dir / "plain.meta.json"));
  CHECK(read_stream(dir / "plain.scvf") == s);
}

TEST_CASE("sidecar path replaces the extension") {
  CHECK(sidecar_path("a/b.scvf") == std::filesystem::path("a/b.meta.json"));
  CHECK(sidecar_path("noext") == std::filesystem::path("noext.meta.json"));
}

TEST_CASE("wrong magic is a format error") {
  std::string bytes = header(1, 2, 1);
  bytes[0] = 'X';
  put_f32(bytes, 1.f);
  put_f32(bytes, 2.f);
  std::istringstream in(bytes);
  CHECK_THROWS_AS(read_stream_payload(in), FormatError);
}

TEST_CASE("unknown version is a format error") {
  std::string bytes = "SCVF";
  put_u16(bytes, 2);
  put_u32(bytes, 0);
  put_u32(bytes, 1);
  put_u32(bytes, 1);
  std::istringstream in(bytes);
  CHECK_THROWS_AS(read_stream_payload(in), FormatError);
}

TEST_CASE("header dim 8 with rows of 7 floats is truncated") {
  std::string bytes = header(3, 8, 4);
  for (int i = 0; i < 3 * 7; ++i) put_f32(bytes, static_cast<float>(i));
  std::istringstream in(bytes);
  try {
    read_stream_payload(in);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }
}

TEST_CASE("trailing bytes are rejected") {
  std::string bytes = header(1, 2, 1);
  put_f32(bytes, 1.f);
  put_f32(bytes, 2.f);
  put_f32(bytes, 3.f);
  std::istringstream in(bytes);
  CHECK_THROWS_AS(read_stream_payload(in), FormatError);
}

TEST_CASE("NaN in the payload is rejected on read") {
  std::string bytes = header(1, 2, 1);
  put_f32(bytes, 1.f);
  put_f32(bytes, std::numeric_limits<float>::quiet_NaN());
  std::istringstream in(bytes);
  CHECK_THROWS_AS(read_stream_payload(in), Error);
}

TEST_CASE("missing file and malformed sidecar are format errors") {
  support::TempDir dir("fio");
  CHECK_THROWS_AS(read_stream(dir / "absent.scvf"), FormatError);
  write_stream(small_stream(), dir / "s.scvf");
  std::ofstream(dir / "s.meta.json") << "{not json";
  CHECK_THROWS_AS(read_stream(dir / "s.scvf"), FormatError);
}

TEST_CASE("random streams round trip") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed);
    const std::size_t dim = 1 + rng.below(12), frames = rng.below(9);
    const std::size_t spatial = 1 + rng.below(dim);
    std::vector<std::vector<float>> rows(frames, std::vector<float>(dim));
    std::vector<std::uint8_t> labels(frames);
    for (std::size_t i = 0; i < frames; ++i) {
      for (auto& v : rows[i]) v = static_cast<float>(rng.normal() * 100.0);
      labels[i] = static_cast<std::uint8_t>(rng.below(2));
    }
    const FeatureStream s(dim, spatial, rows, labels, StreamMeta{"seed" + std::to_string(seed), std::nullopt});
    std::stringstream buf;
    write_stream_payload(s, buf);
    const auto back = read_stream_payload(buf).with_labels(labels);
    CHECK(back.dim() == s.dim());
    CHECK(back.spatial_dim() == s.spatial_dim());
    CHECK(back.frames().size() == s.frames().size());
    for (std::size_t t = 1; t <= frames; ++t) CHECK(back.frame(t).values == s.frame(t).values);
  }
}

}  // TEST_SUITE

TEST_SUITE("synthetic") {

TEST_CASE("same config gives bit-identical streams") {
  SynthConfig c;
  c.anomaly_spans = {{20, 30}};
  c.seed = 3;
  CHECK(generate_synthetic(c) == generate_synthetic(c));
  SynthConfig other = c;
  other.seed = 4;
  CHECK_FALSE(generate_synthetic(c) == generate_synthetic(other));
}

TEST_CASE("no spans means all labels are zero") {
  const auto s = generate_synthetic(SynthConfig{});
  REQUIRE(s.labels());
  CHECK(std::accumulate(s.labels()->begin(), s.labels()->end(), 0) == 0);
}

TEST_CASE("span 150..160 labels eleven frames") {
  SynthConfig c;
  c.dim = 16;
  c.length = 200;
  c.anomaly_spans = {{150, 160}};
  const auto s = generate_synthetic(c);
  REQUIRE(s.labels());
  CHECK(std::accumulate(s.labels()->begin(), s.labels()->end(), 0) == 11);
  CHECK((*s.labels())[148] == 0);
  CHECK((*s.labels())[149] == 1);
  CHECK((*s.labels())[159] == 1);
  CHECK((*s.labels())[160] == 0);
  CHECK(s.dim() == 16);
  CHECK(s.spatial_dim() == 8);
  CHECK(s.size() == 200);
}

TEST_CASE("anomalous frames are shifted by the magnitude") {
  SynthConfig c;
  c.noise_std = 0.0;
  const auto clean = generate_synthetic(c);
  c.anomaly_spans = {{10, 12}};
  c.anomaly_magnitude = 2.0;
  const auto shifted = generate_synthetic(c);
  for (std::size_t t = 1; t <= c.length; ++t) {
    for (std::size_t j = 0; j < c.dim; ++j) {
      const double d = shifted.frame(t).values[j] - clean.frame(t).values[j];
      if (t >= 10 && t <= 12) {
        CHECK(std::abs(std::abs(d) - 2.0) < 1e-5);
      } else {
        CHECK(d == 0.0);
      }
    }
  }
}

TEST_CASE("config validation") {
  SynthConfig c;
  c.anomaly_spans = {{0, 3}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.anomaly_spans = {{190, 201}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.anomaly_spans = {{10, 20}, {20, 30}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.anomaly_spans = {{10, 20}, {21, 30}};
  CHECK_NOTHROW(c.validate());
  c.anomaly_magnitude = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  SynthConfig d;
  d.dim = 0;
  CHECK_THROWS_AS(generate_synthetic(d), ConfigError);
}

}  // TEST_SUITE
