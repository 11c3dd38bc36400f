#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gvse/autodiff.hpp"

namespace gvse {

// Builds a scalar loss on the given tape. Must be deterministic.
using LossClosure = std::function<Var(Tape&)>;

struct ParamGradError {
  std::string name;
  std::size_t elements = 0;
  double max_rel_error = 0.0;  // |analytic - numeric| / max(1, |numeric|)
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<ParamGradError> params;
  double tolerance = 0.0;
  bool passed = false;

  double max_rel_error() const;
};

/// Central-difference check of every element of every listed parameter.
/// Throws OracleInvalid if two evaluations of the closure disagree.
GradCheckReport check_gradients(const LossClosure& closure, const std::vector<Param*>& params, double h, double tol);

}  // namespace gvse
