#include <cstdlib>

#include "doctest.h"
#include "json.hpp"
#include "scvad/feature_io.hpp"
#include "support.hpp"

using namespace scvad;

TEST_SUITE("interop") {

TEST_CASE("reads a stream written by the Python writer") {
  const char* dir = std::getenv("SCVAD_INTEROP_DIR");
  REQUIRE_MESSAGE(dir != nullptr, "SCVAD_INTEROP_DIR is not set");
  const std::filesystem::path root(dir);
  const auto expected = nlohmann::json::parse(support::slurp(root / "expected.json"));
  const auto s = read_stream(root / "clip.scvf");
  CHECK(s.dim() == expected["dim"].get<std::size_t>());
  CHECK(s.spatial_dim() == expected["spatial_dim"].get<std::size_t>());
  REQUIRE(s.size() == expected["rows"].size());
  for (std::size_t t = 1; t <= s.size(); ++t) {
    const auto row = expected["rows"][t - 1].get<std::vector<double>>();
    for (std::size_t j = 0; j < row.size(); ++j) CHECK(static_cast<double>(s.frame(t).values[j]) == row[j]);
  }
  REQUIRE(s.labels());
  CHECK(*s.labels() == expected["labels"].get<std::vector<std::uint8_t>>());
  CHECK(s.meta().source == "interop");
  CHECK(s.meta().fps == 25.0);
}

}  // TEST_SUITE
