#pragma once

#include "vquant/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace vquant {

struct GradCheckResult {
  double max_relative_error = 0.0;
  bool finite = true;
  std::size_t worst_param = 0;
  Eigen::Index worst_index = 0;
  std::size_t coordinates = 0;

  bool passed(double tolerance) const { return finite && max_relative_error <= tolerance; }
};

/**
 * Compares reverse-mode gradients of a scalar loss against central finite
 * differences, coordinate by coordinate, returning the largest
 * |g_ad - g_fd| / max(1, |g_ad|, |g_fd|).
 *
 * `loss` must rebuild its graph on every call. Parameter values are perturbed
 * in place and restored before returning. A non-finite loss anywhere marks the
 * result as not finite.
 */
template <typename Scalar>
GradCheckResult grad_check(const std::function<Var<Scalar>()>& loss, std::span<Var<Scalar>> params,
                           Scalar step = Scalar(1e-3)) {
  GradCheckResult result;
  for (auto& p : params) p.zero_grad();
  const Var<Scalar> root = loss();
  if (!root.value().all_finite()) {
    result.finite = false;
    result.max_relative_error = std::numeric_limits<double>::infinity();
    return result;
  }
  backward(root);

  std::vector<Vector<Scalar>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.push_back(p.grad().data());

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& values = params[pi].mutable_value().data();
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      const Scalar saved = values[i];
      values[i] = saved + step;
      const Scalar up = loss().value().item();
      values[i] = saved - step;
      const Scalar down = loss().value().item();
      values[i] = saved;
      ++result.coordinates;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        result.finite = false;
        result.max_relative_error = std::numeric_limits<double>::infinity();
        return result;
      }
      const double fd = static_cast<double>((up - down) / (Scalar(2) * step));
      const double ad = static_cast<double>(analytic[pi][i]);
      const double err =
          std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_param = pi;
        result.worst_index = i;
      }
    }
  }
  for (auto& p : params) p.zero_grad();
  return result;
}

}  // namespace vquant
