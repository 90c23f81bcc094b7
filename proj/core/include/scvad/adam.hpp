#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scvad/tensor.hpp"

namespace scvad {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor2> m;
  std::vector<Tensor2> v;
  std::size_t step = 0;

  // Zero moments shaped like `params`.
  static AdamState for_parameters(std::span<const Tensor2* const> params, AdamConfig config);
};

// One bias-corrected Adam update, in place. Throws DimensionError when the
// parameter, gradient and moment shapes disagree.
void adam_step(std::span<Tensor2* const> params, std::span<const Tensor2> grads, AdamState& state);

}  // namespace scvad
