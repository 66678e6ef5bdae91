#include "onsd/evaluation.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>

namespace onsd {

IccResult icc(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  detail::require_paired(a, b, 5);
  const double n = static_cast<double>(a.size());
  const double k = 2.0;

  Eigen::MatrixXd x(a.size(), 2);
  x << a, b;
  const double grand = x.mean();
  const Eigen::VectorXd row_means = x.rowwise().mean();
  const Eigen::RowVectorXd col_means = x.colwise().mean();
  const double ss_total = (x.array() - grand).square().sum();
  const double ss_rows = k * (row_means.array() - grand).square().sum();
  const double ss_cols = n * (col_means.array() - grand).square().sum();
  const double ss_error = std::max(ss_total - ss_rows - ss_cols, 0.0);

  IccResult r;
  r.ms_rows = ss_rows / (n - 1.0);
  r.ms_cols = ss_cols / (k - 1.0);
  r.ms_error = ss_error / ((n - 1.0) * (k - 1.0));

  // Perfect agreement: no rater effect and no residual.
  if (ss_total == 0.0 || (r.ms_error == 0.0 && r.ms_cols == 0.0)) {
    r.icc = r.ci_low = r.ci_high = 1.0;
    r.degenerate = true;
    return r;
  }

  const double msr = r.ms_rows;
  const double msc = r.ms_cols;
  const double mse = r.ms_error;
  r.icc = (msr - mse) / (msr + (k - 1.0) * mse + k * (msc - mse) / n);

  const double alpha = 0.05;
  const double ca = k * r.icc / (n * (1.0 - r.icc));
  const double cb = 1.0 + k * r.icc * (n - 1.0) / (n * (1.0 - r.icc));
  const double v = std::pow(ca * msc + cb * mse, 2) /
                   (std::pow(ca * msc, 2) / (k - 1.0) + std::pow(cb * mse, 2) / ((n - 1.0) * (k - 1.0)));
  if (!(v > 0.0) || !std::isfinite(v)) {
    r.ci_low = r.ci_high = r.icc;
    r.degenerate = true;
    return r;
  }
  namespace bm = boost::math;
  const double f_upper = bm::quantile(bm::fisher_f(n - 1.0, v), 1.0 - alpha / 2.0);
  const double f_lower = bm::quantile(bm::fisher_f(v, n - 1.0), 1.0 - alpha / 2.0);
  const double spread = k * msc + (k * n - k - n) * mse;
  r.ci_low = n * (msr - f_upper * mse) / (f_upper * spread + n * msr);
  r.ci_high = n * (f_lower * msr - mse) / (spread + n * f_lower * msr);
  r.ci_low = std::clamp(r.ci_low, -1.0, r.icc);
  r.ci_high = std::clamp(r.ci_high, r.icc, 1.0);
  return r;
}

AgreementReport agreement(const Eigen::Ref<const Eigen::VectorXd>& candidate,
                          const Eigen::Ref<const Eigen::VectorXd>& reference) {
  AgreementReport r;
  r.n = static_cast<int>(candidate.size());
  r.mean_error = mean_error(candidate, reference);
  r.mse = mse_printed(candidate, reference);
  r.mse_conventional = mse_conventional(candidate, reference);
  r.icc = icc(candidate, reference);
  r.bland_altman = bland_altman(candidate, reference);
  try {
    r.cohens_d = cohens_d(candidate, reference);
  } catch (const std::invalid_argument&) {
    r.cohens_d.reset();
  }
  return r;
}

}  // namespace onsd
