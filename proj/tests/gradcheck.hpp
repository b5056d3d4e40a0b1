#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "trackpose/nn.hpp"

namespace trackpose::testing {

struct GradCheckResult {
  double worst_relative = 0.0;
  std::string worst_parameter;
  std::size_t checked = 0;
};

/// Compares every parameter gradient of `model` at (x, y) with central finite
/// differences of the MSE. The relative error uses max(|analytic|, |numeric|, floor).
inline GradCheckResult check_gradients(learn::VelocityModel& model, const learn::SequenceBatch& x,
                                       const learn::Matrix& y, double step = 1e-5, double floor = 1e-6) {
  model.forward_backward(x, y);
  GradCheckResult res;
  for (auto& p : model.parameters()) {
    const learn::Matrix analytic = p.grad;
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double saved = p.value(i);
      p.value(i) = saved + step;
      const double up = learn::mse(model.forward(x), y);
      p.value(i) = saved - step;
      const double down = learn::mse(model.forward(x), y);
      p.value(i) = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic(i);
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      if (rel > res.worst_relative) {
        res.worst_relative = rel;
        res.worst_parameter = p.name + "[" + std::to_string(i) + "]";
      }
      ++res.checked;
    }
  }
  return res;
}

}  // namespace trackpose::testing
