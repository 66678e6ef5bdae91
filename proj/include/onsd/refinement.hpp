#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "onsd/image.hpp"
#include "onsd/localization.hpp"

namespace onsd {

/// Histogram over [0, 255] with `epsilon` added to every bin before
/// normalization, so every bin has positive mass.
struct GrayDistribution {
  Eigen::VectorXd mass;
  double epsilon = 0.0;

  int bin_count() const { return static_cast<int>(mass.size()); }
};

/// Raw (unsmoothed) bin counts of all pixels in columns [first, last].
Eigen::VectorXd column_histogram(const GrayFrame& frame, int first, int last, int bin_count);

/// Throws std::invalid_argument for an empty or out-of-frame column range.
GrayDistribution gray_distribution(const GrayFrame& frame, int first, int last,
                                   int bin_count = 32, double epsilon = 1e-6);

/// D(p || q) = sum p ln(p / q), natural log, 0 ln 0 = 0. Infinite when q has a
/// zero where p does not.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kl_divergence(const Eigen::MatrixBase<DerivedP>& p,
                                        const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: bin counts differ");
  Scalar d = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar pi = p(i);
    if (pi <= 0) continue;
    const Scalar qi = q(i);
    if (qi <= 0) return std::numeric_limits<Scalar>::infinity();
    d += pi * std::log(pi / qi);
  }
  return d;
}

inline double kl_divergence(const GrayDistribution& p, const GrayDistribution& q) {
  return kl_divergence(p.mass, q.mass);
}

enum class Side { kLeft, kRight };

/// How the distribution at position d is gathered.
enum class StripMode {
  kAccumulated,  // all columns between the outer coarse boundary and d
  kColumn,       // the single column d
};

struct RefinementParams {
  int bin_count = 32;
  double epsilon = 1e-6;
  StripMode mode = StripMode::kAccumulated;
};

/// Position-KL signal over the domain [first, last]: [d_left, d_center] for
/// the left side, [d_center, d_right] for the right.
struct KlSignal {
  Side side = Side::kLeft;
  int first = 0;
  int last = 0;
  Eigen::VectorXd raw;       // L(d)
  Eigen::VectorXd weighted;  // Gaussian-weighted L(d); empty until weighted
  double mu = 0.0;
  double sigma = 0.0;

  int length() const { return last - first + 1; }
};

/// L(d) = D(GL_d || GL_center) where GL_center is the single column at
/// d_center and GL_d follows params.mode (mirrored for the right side).
KlSignal kl_signal(const GrayFrame& frame, const BoundarySet& bounds, Side side,
                   const RefinementParams& params = {});

/// Multiplies L by the normal pdf with mu at the domain midpoint and sigma of
/// one sixth of the domain span. Throws std::invalid_argument for a
/// zero-width domain.
KlSignal apply_gaussian_weight(KlSignal signal);

struct RefinedBoundary {
  int index = 0;
  bool low_confidence = false;  // no stationary point; argmax fallback used
};

/// Scans the backward difference of the weighted signal from the domain's
/// outer end toward the center and returns the index at which it changes sign
/// after a rise (the transition from dissimilar to similar). When several
/// exist the one with the largest weighted peak wins; with none, the argmax
/// is returned and flagged low-confidence. Requires a domain of >= 3.
RefinedBoundary refine_boundary(const KlSignal& signal);

struct Diameter {
  double value = 0.0;
  bool millimeters = false;  // false: value is in pixels (no calibration)
};

/// (right - left) * mm_per_pixel, or the pixel width when uncalibrated.
Diameter map_to_mm(int refined_left, int refined_right, std::optional<double> mm_per_pixel);

struct MeasureParams {
  GmmParams gmm;
  int peak_smoothing_window = 5;
  double peak_min_rise = 0.1;
  RefinementParams refinement;
};

/// Every intermediate of one frame's measurement.
struct Measurement {
  Eigen::VectorXd column_signal;
  Eigen::VectorXd kappa;
  GmmModel gmm;
  int start_column = 0;  // mass midpoint
  BoundarySet bounds;
  KlSignal left;
  KlSignal right;
  bool low_confidence = false;
  double width_px = 0.0;
  std::optional<double> width_mm;
};

/// Column signal -> GMM mask -> mass midpoint -> center walk -> flank peaks ->
/// KL signals -> Gaussian weighting -> refined boundaries -> mm. With
/// `coarse` supplied, localization is skipped. Failures are rethrown as
/// PipelineError tagged with the stage name.
Measurement measure_onsd(const GrayFrame& frame, const MeasureParams& params = {},
                         const std::optional<BoundarySet>& coarse = std::nullopt);

std::string to_string(StripMode mode);
StripMode strip_mode_from_string(const std::string& s);

}  // namespace onsd
