#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "onsd/image.hpp"

namespace onsd {

/// v(n): per-column sum of intensities over all rows.
template <typename Derived>
Eigen::VectorXd column_sum_signal(const Eigen::MatrixBase<Derived>& pixels) {
  return pixels.template cast<double>().colwise().sum().transpose();
}

inline Eigen::VectorXd column_sum_signal(const GrayFrame& frame) {
  return column_sum_signal(frame.pixels());
}

/// One-dimensional Gaussian mixture over intensities.
struct GmmModel {
  Eigen::VectorXd weights;
  Eigen::VectorXd means;
  Eigen::VectorXd variances;
  int iterations = 0;
  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_trace;  // after every EM iteration

  int components() const { return static_cast<int>(means.size()); }
  /// Index of the component with the largest mean.
  int brightest() const;
  /// Posterior responsibility of component c for intensity x.
  double posterior(int c, double x) const;
};

struct GmmParams {
  int components = 2;
  int max_iters = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  double variance_floor = 1e-3;
  int subsample = 4;  // fit on every subsample-th pixel
};

/// EM on 1-D data. Means start at the (c + 0.5)/C quantiles (falling back to
/// quantiles of the distinct values when those collide), variances at the
/// sample variance, weights uniform. Stops when the log-likelihood gain drops
/// below tol or after max_iters. Throws std::domain_error when the data has
/// fewer distinct values than components.
GmmModel gmm_fit(const Eigen::Ref<const Eigen::VectorXd>& data, int components, int max_iters,
                 double tol, double variance_floor = 1e-3);

/// Fits on every params.subsample-th pixel, starting at offset seed % subsample.
GmmModel gmm_fit_frame(const GrayFrame& frame, const GmmParams& params);

/// 255 where the brightest component's posterior is >= 0.5.
BinaryMask foreground_mask(const GrayFrame& frame, const GmmModel& model);

/// kappa(n): cumulative normalized column mass of the mask.
Eigen::VectorXd cumulative_column_mass(const BinaryMask& mask);

/// Smallest n with kappa(n) >= 0.5. Throws std::domain_error on an empty mask.
int mass_midpoint(const BinaryMask& mask);

/// Single-step descent on v from d_start until both neighbours are no lower
/// (a discrete local minimum). Throws std::domain_error when the walk reaches
/// either end of the signal.
int locate_center(const Eigen::Ref<const Eigen::VectorXd>& v, int d_start);

struct FlankPeaks {
  int left = 0;
  int right = 0;
};

/// Nearest interior local maxima of the moving-average-smoothed v on each
/// side of d_center; a plateau resolves to its index nearest the center.
/// A candidate counts only if it stands at least min_rise x (max - min) of
/// the smoothed signal above the lowest value between it and the center, and
/// the signal beyond it falls that far before climbing above it. Throws
/// std::domain_error naming the side without a peak.
FlankPeaks find_flank_peaks(const Eigen::Ref<const Eigen::VectorXd>& v, int d_center,
                            int smoothing_window = 5, double min_rise = 0.0);

/// Coarse and refined sheath boundaries for one frame, as column indices.
struct BoundarySet {
  int d_left = 0;
  int d_center = 0;
  int d_right = 0;
  std::optional<int> refined_left;
  std::optional<int> refined_right;

  /// d_left < d_center < d_right, and d_left <= refined_left <
  /// refined_right <= d_right when refined.
  bool valid() const;
};

}  // namespace onsd
