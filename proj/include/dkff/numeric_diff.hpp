#pragma once

#include <Eigen/Dense>
#include <functional>

namespace dkff {

/// Central-difference Jacobian of f at x.
///
/// `output_difference(a, b)` computes a - b in the output space; pass one
/// that wraps angles when f returns angular components.
template <typename F, typename Diff>
Eigen::MatrixXd central_difference(const F& f, const Eigen::VectorXd& x, double step,
                                   const Diff& output_difference) {
  const Eigen::VectorXd y0 = f(x);
  Eigen::MatrixXd j(y0.size(), x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + step;
    xm(i) = x(i) - step;
    j.col(i) = output_difference(f(xp), f(xm)) / (2.0 * step);
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return j;
}

template <typename F>
Eigen::MatrixXd central_difference(const F& f, const Eigen::VectorXd& x, double step) {
  return central_difference(
      f, x, step,
      [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) -> Eigen::VectorXd { return a - b; });
}

}  // namespace dkff
