#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <stdexcept>

namespace onsd {

/// Centered moving average with an odd `window`. Near the ends the window
/// shrinks symmetrically, so s[0] and s[n-1] are returned unchanged.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> moving_average(
    const Eigen::MatrixBase<Derived>& s, int window) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = s.size();
  if (window < 1 || window % 2 == 0 || window > n) {
    throw std::invalid_argument("moving average window must be odd and in [1, length]");
  }
  const Eigen::Index half = window / 2;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = std::min({half, i, n - 1 - i});
    out(i) = s.segment(i - r, 2 * r + 1).sum() / static_cast<Scalar>(2 * r + 1);
  }
  return out;
}

/// Forward difference applied `order` times; the result is `order` shorter.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> forward_difference(
    const Eigen::MatrixBase<Derived>& s, int order) {
  if (order < 0) throw std::invalid_argument("difference order must be non-negative");
  if (s.size() <= order) throw std::invalid_argument("series too short for difference order");
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out = s;
  for (int k = 0; k < order; ++k) {
    const Eigen::Index n = out.size() - 1;
    out = (out.tail(n) - out.head(n)).eval();
  }
  return out;
}

}  // namespace onsd
