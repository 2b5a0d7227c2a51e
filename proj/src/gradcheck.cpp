#include "radarfuse/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace radarfuse::nn {

template <typename T>
GradCheckReport grad_check(const std::function<double(bool with_grad)>& loss,
                           std::span<const ParamRef<T>> params, double h) {
  GradCheckReport report;
  loss(true);  // fill analytic gradients
  std::vector<Tensor<T>> analytic;
  for (const auto& p : params) {
    if (p.trainable) analytic.push_back(*p.grad);
  }

  std::size_t t = 0;
  for (const auto& p : params) {
    if (!p.trainable) continue;
    GradCheckReport::Entry entry{p.name, 0.0};
    Tensor<T>& value = *p.value;
    for (std::int64_t j = 0; j < value.numel(); ++j) {
      const T saved = value[j];
      value[j] = static_cast<T>(saved + h);
      const double up = loss(false);
      value[j] = static_cast<T>(saved - h);
      const double down = loss(false);
      value[j] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double exact = analytic[t][j];
      const double denom = std::max({1.0, std::abs(numeric), std::abs(exact)});
      entry.max_rel_err = std::max(entry.max_rel_err, std::abs(numeric - exact) / denom);
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.per_param.push_back(std::move(entry));
    ++t;
  }
  return report;
}

template GradCheckReport grad_check<float>(const std::function<double(bool)>&,
                                           std::span<const ParamRef<float>>, double);
template GradCheckReport grad_check<double>(const std::function<double(bool)>&,
                                            std::span<const ParamRef<double>>, double);

}  // namespace radarfuse::nn
