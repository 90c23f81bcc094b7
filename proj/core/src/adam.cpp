#include "scvad/adam.hpp"

#include <cmath>
#include <string>

#include "scvad/error.hpp"

namespace scvad {

void AdamConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("adam: lr must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam: epsilon must be positive");
}

AdamState AdamState::for_parameters(std::span<const Tensor2* const> params, AdamConfig config) {
  config.validate();
  AdamState state;
  state.config = config;
  state.m.reserve(params.size());
  state.v.reserve(params.size());
  for (const Tensor2* p : params) {
    state.m.emplace_back(p->rows(), p->cols());
    state.v.emplace_back(p->rows(), p->cols());
  }
  return state;
}

void adam_step(std::span<Tensor2* const> params, std::span<const Tensor2> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters, " +
                         std::to_string(grads.size()) + " gradients, " + std::to_string(state.m.size()) +
                         " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], grads[i], "adam_step");
    require_same_shape(*params[i], state.m[i], "adam_step");
    require_same_shape(*params[i], state.v[i], "adam_step");
  }

  const auto& cfg = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace scvad
