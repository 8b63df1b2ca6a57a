#pragma once

// Central finite-difference verification of reverse-mode gradients. Losses
// are rebuilt from scratch per evaluation, so the numeric route shares no
// state with the autograd sweep it checks.

#include <functional>
#include <string>
#include <vector>

#include "lcfuse/tensor.hpp"

namespace lcfuse {

struct GradCheckReport {
  double max_rel_err = 0.0;
  long elements = 0;
  long skipped_kinks = 0;
  std::string worst_param;

  bool ok(double tol = 1e-4) const { return max_rel_err < tol; }
};

// build_loss() must return a scalar Value computed from the given params.
// Relative error uses a unit-scale floor so near-zero gradients compare by
// absolute difference. Central differences are only valid where the loss is
// smooth around the probe point; an element whose forward and backward
// one-sided slopes disagree sits on or across a relu/L1 kink and is skipped.
// A genuine gradient bug has consistent one-sided slopes and is not skipped.
inline GradCheckReport check_gradients(const std::function<Value<double>()>& build_loss,
                                       const std::vector<Param<double>*>& params, double step = 1e-5) {
  zero_grads(params);
  Value<double> loss = build_loss();
  backward(loss);
  const double base = loss.scalar_value();
  std::vector<Mat<double>> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param<double>* p = params[pi];
    for (long k = 0; k < p->value.size(); ++k) {
      const double saved = p->value.data()[k];
      p->value.data()[k] = saved + step;
      const double up = build_loss().scalar_value();
      p->value.data()[k] = saved - step;
      const double down = build_loss().scalar_value();
      p->value.data()[k] = saved;
      ++report.elements;

      const double forward = (up - base) / step;
      const double backward_est = (base - down) / step;
      // a kink at distance d < step biases the central estimate by half the
      // one-sided gap, so the gate must sit below twice the tolerance
      const double sided_gap =
          std::abs(forward - backward_est) / std::max({std::abs(forward), std::abs(backward_est), 1e-3});
      if (sided_gap > 1.5e-4) {
        ++report.skipped_kinks;
        continue;
      }
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[pi].data()[k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3});
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = p->name + "[" + std::to_string(k) + "]";
      }
    }
  }
  return report;
}

}  // namespace lcfuse
