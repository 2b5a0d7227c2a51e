#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "radarfuse/layers.hpp"

namespace radarfuse::nn {

struct GradCheckReport {
  struct Entry {
    std::string name;
    double max_rel_err = 0.0;
  };
  std::vector<Entry> per_param;
  double max_rel_err = 0.0;

  bool passed(double tolerance) const { return max_rel_err < tolerance; }
};

// Central-difference verification of analytic parameter gradients.
//
// loss(with_grad) must be deterministic, return the scalar loss, and fill
// every trainable parameter's grad slot when with_grad is true. The checker
// perturbs each parameter element by +-h and compares. Relative error is
// |analytic - numeric| / max(1, |analytic|, |numeric|).
template <typename T>
GradCheckReport grad_check(const std::function<double(bool with_grad)>& loss,
                           std::span<const ParamRef<T>> params, double h = 1e-4);

}  // namespace radarfuse::nn
