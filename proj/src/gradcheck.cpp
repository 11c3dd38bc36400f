#include "gvse/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gvse/error.hpp"

namespace gvse {

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& p : params) worst = std::max(worst, p.max_rel_error);
  return worst;
}

namespace {

double evaluate(const LossClosure& closure) {
  Tape tape;
  return closure(tape).value().item();
}

void set_element(Param& p, std::size_t i, double v) {
  std::vector<double> data(p.value().values().begin(), p.value().values().end());
  data[i] = v;
  p.set_value(Tensor(p.value().shape(), std::move(data)));
}

}  // namespace

GradCheckReport check_gradients(const LossClosure& closure, const std::vector<Param*>& params, double h, double tol) {
  if (!(h > 0.0)) throw ContractError("check_gradients needs h > 0");

  const double first = evaluate(closure);
  const double second = evaluate(closure);
  if (first != second) {
    throw OracleInvalid(fmt::format("loss closure is not deterministic: {} vs {}", first, second));
  }

  for (auto* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(closure(tape));
  }

  GradCheckReport report;
  report.tolerance = tol;
  for (auto* p : params) {
    const std::vector<double> analytic(p->grad().begin(), p->grad().end());
    const Tensor original = p->value();
    ParamGradError err{p->name(), original.size(), 0.0, 0};
    for (std::size_t i = 0; i < original.size(); ++i) {
      const double x = original[i];
      set_element(*p, i, x + h);
      const double plus = evaluate(closure);
      set_element(*p, i, x - h);
      const double minus = evaluate(closure);
      p->set_value(original);
      const double numeric = (plus - minus) / (2.0 * h);
      const double rel = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
      if (rel > err.max_rel_error) {
        err.max_rel_error = rel;
        err.worst_index = i;
      }
    }
    report.params.push_back(err);
  }
  report.passed = std::all_of(report.params.begin(), report.params.end(),
                              [tol](const ParamGradError& e) { return e.max_rel_error <= tol; });
  return report;
}

}  // namespace gvse
