#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gvse/tensor.hpp"

namespace gvse {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

struct OptimizerState {
  AdamConfig config;
  std::size_t step = 0;
  std::vector<std::vector<double>> m, v;  // aligned with the parameter list
};

OptimizerState make_optimizer(std::span<Param* const> params, const AdamConfig& config);

/// One bias-corrected Adam update from the accumulated grads, which are then
/// zeroed. Throws NumericFault on a non-finite gradient before touching anything.
void adam_step(std::span<Param* const> params, OptimizerState& state);

/// Euclidean norm over every gradient.
double grad_norm(std::span<Param* const> params);

}  // namespace gvse
