#include "gvse/optim.hpp"

#include <cmath>

#include <fmt/format.h>

#include "gvse/error.hpp"

namespace gvse {

void AdamConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError(fmt::format("learning rate must be >= 0, got {}", lr));
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError(fmt::format("beta1 must lie in [0, 1), got {}", beta1));
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError(fmt::format("beta2 must lie in [0, 1), got {}", beta2));
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError(fmt::format("eps must be > 0, got {}", eps));
}

OptimizerState make_optimizer(std::span<Param* const> params, const AdamConfig& config) {
  config.validate();
  OptimizerState state{config, 0, {}, {}};
  for (const auto* p : params) {
    state.m.emplace_back(p->value().size(), 0.0);
    state.v.emplace_back(p->value().size(), 0.0);
  }
  return state;
}

void adam_step(std::span<Param* const> params, OptimizerState& state) {
  if (params.size() != state.m.size()) {
    throw ContractError(fmt::format("optimizer tracks {} parameters, got {}", state.m.size(), params.size()));
  }
  for (const auto* p : params) {
    for (double g : p->grad()) {
      if (!std::isfinite(g)) throw NumericFault(fmt::format("non-finite gradient in parameter '{}'", p->name()));
    }
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto* p = params[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != p->value().size()) throw DimensionError(fmt::format("optimizer state for '{}' has the wrong size", p->name()));
    const auto grad = p->grad();
    std::vector<double> next(p->value().values().begin(), p->value().values().end());
    for (std::size_t i = 0; i < next.size(); ++i) {
      const double g = grad[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double mhat = m[i] / correct1;
      const double vhat = v[i] / correct2;
      next[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
    p->set_value(Tensor(p->value().shape(), std::move(next)));
    p->zero_grad();
  }
}

double grad_norm(std::span<Param* const> params) {
  double total = 0.0;
  for (const auto* p : params)
    for (double g : p->grad()) total += g * g;
  return std::sqrt(total);
}

}  // namespace gvse
