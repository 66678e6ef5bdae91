#pragma once

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace onsd {

/// ONSD values (mm) ordered by subject/video id.
struct MeasurementSeries {
  std::vector<std::string> ids;
  Eigen::VectorXd values;
  std::string label;
};

namespace detail {

template <typename A, typename B>
void require_paired(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, Eigen::Index min_n) {
  if (a.size() != b.size()) throw std::invalid_argument("series lengths differ");
  if (a.size() < min_n) {
    throw std::invalid_argument("need at least " + std::to_string(min_n) + " paired values");
  }
}

template <typename Derived>
typename Derived::Scalar sample_variance(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar mean = x.mean();
  return (x.array() - mean).square().sum() / static_cast<Scalar>(x.size() - 1);
}

}  // namespace detail

/// (1/n) sum |1 - candidate_k / reference_k| x 100.
template <typename A, typename B>
typename A::Scalar mean_error(const Eigen::MatrixBase<A>& candidate, const Eigen::MatrixBase<B>& reference) {
  detail::require_paired(candidate, reference, 1);
  if ((reference.array() == 0).any()) throw std::invalid_argument("mean_error: zero reference value");
  return (1 - candidate.array() / reference.array()).abs().mean() * 100;
}

/// ||a - b||_2 / n: the Euclidean norm scaled by 1/n, not a mean of squares.
template <typename A, typename B>
typename A::Scalar mse_printed(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::require_paired(a, b, 1);
  return (a - b).norm() / static_cast<typename A::Scalar>(a.size());
}

/// Conventional mean of squared differences.
template <typename A, typename B>
typename A::Scalar mse_conventional(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::require_paired(a, b, 1);
  return (a - b).squaredNorm() / static_cast<typename A::Scalar>(a.size());
}

struct IccResult {
  double icc = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool degenerate = false;  // zero residual or zero total variance
  // Two-way ANOVA mean squares.
  double ms_rows = 0.0;
  double ms_cols = 0.0;
  double ms_error = 0.0;
};

/// ICC(2,1): two-way random effects, absolute agreement, single rater, with
/// the 95% interval from the F-distribution bounds. Requires n >= 5 pairs.
IccResult icc(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

struct BlandAltman {
  double bias = 0.0;
  double sd = 0.0;
  double loa_low = 0.0;
  double loa_high = 0.0;
  Eigen::VectorXd means;        // (a + b) / 2, for plotting
  Eigen::VectorXd differences;  // a - b
};

/// bias = mean(a - b); limits = bias -+ 1.96 sd(a - b), sample sd.
template <typename A, typename B>
BlandAltman bland_altman(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::require_paired(a, b, 2);
  BlandAltman r;
  r.differences = (a - b).template cast<double>();
  r.means = ((a + b) / 2).template cast<double>();
  r.bias = r.differences.mean();
  r.sd = std::sqrt(detail::sample_variance(r.differences));
  r.loa_low = r.bias - 1.96 * r.sd;
  r.loa_high = r.bias + 1.96 * r.sd;
  return r;
}

/// (mean(a) - mean(b)) / pooled sd, pooled with n - 1 weights.
template <typename A, typename B>
typename A::Scalar cohens_d(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  using Scalar = typename A::Scalar;
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("cohens_d: need at least 2 values per series");
  const Scalar na = static_cast<Scalar>(a.size());
  const Scalar nb = static_cast<Scalar>(b.size());
  const Scalar pooled = std::sqrt(((na - 1) * detail::sample_variance(a) + (nb - 1) * detail::sample_variance(b)) /
                                  (na + nb - 2));
  if (pooled == 0) throw std::invalid_argument("cohens_d: pooled standard deviation is zero");
  return (a.mean() - b.mean()) / pooled;
}

struct AgreementReport {
  int n = 0;
  double mean_error = 0.0;
  double mse = 0.0;               // printed (norm / n) form
  double mse_conventional = 0.0;
  IccResult icc;
  BlandAltman bland_altman;
  std::optional<double> cohens_d;  // absent when the pooled sd is zero
};

/// All statistics for candidate vs reference; ICC needs n >= 5.
AgreementReport agreement(const Eigen::Ref<const Eigen::VectorXd>& candidate,
                          const Eigen::Ref<const Eigen::VectorXd>& reference);

}  // namespace onsd
