#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "scvad/graph.hpp"
#include "scvad/random.hpp"
#include "scvad/tensor.hpp"

namespace support {

inline scvad::Tensor2 random_tensor(scvad::Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  scvad::Tensor2 t(rows, cols);
  for (auto& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

// Central differences against reverse mode for every entry of `params`.
// `loss` rebuilds the graph from the current parameter values and returns the
// loss node. Entries whose +-step changes any ReLU's sign are skipped, since
// the derivative is not defined across a kink.
struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

// Denominator floor for the relative error, so entries whose true gradient
// is numerically zero are compared absolutely.
inline constexpr double kGradFloor = 1e-6;
// Small enough that truncation stays well under 1e-4 relative on LayerNorm
// paths, large enough that cancellation does not take over.
inline constexpr double kFdStep = 5e-5;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
}

inline GradCheck grad_check(const std::vector<scvad::Tensor2*>& params,
                            const std::function<scvad::NodeId(scvad::Graph&, std::vector<scvad::NodeId>&)>& build) {
  GradCheck result;
  std::vector<scvad::Tensor2> analytic;
  std::uint64_t base_pattern = 0;
  {
    scvad::Graph g;
    std::vector<scvad::NodeId> ids;
    const auto loss = build(g, ids);
    base_pattern = g.activation_pattern();
    auto grads = g.backward(loss);
    for (auto id : ids) analytic.push_back(grads.take(id));
  }
  auto evaluate = [&](std::uint64_t& pattern) {
    scvad::Graph g;
    std::vector<scvad::NodeId> ids;
    const auto loss = build(g, ids);
    pattern = g.activation_pattern();
    return g.value(loss)(0, 0);
  };
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto data = params[k]->data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double original = data[i];
      std::uint64_t plus_pattern = 0, minus_pattern = 0;
      data[i] = original + kFdStep;
      const double plus = evaluate(plus_pattern);
      data[i] = original - kFdStep;
      const double minus = evaluate(minus_pattern);
      data[i] = original;
      if (plus_pattern != base_pattern || minus_pattern != base_pattern) {
        ++result.skipped;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * kFdStep);
      result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic[k].data()[i], numeric));
      ++result.checked;
    }
  }
  return result;
}

// Fresh empty directory under the system temp dir.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("scvad-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace support
