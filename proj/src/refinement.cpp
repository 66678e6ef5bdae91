#include "onsd/refinement.hpp"

#include <algorithm>
#include <numbers>

#include "onsd/errors.hpp"

namespace onsd {

namespace {

GrayDistribution smoothed(const Eigen::VectorXd& counts, double epsilon) {
  GrayDistribution d;
  d.epsilon = epsilon;
  d.mass = counts.array() + epsilon;
  d.mass /= d.mass.sum();
  return d;
}

template <typename F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(stage, e.what());
  }
}

}  // namespace

Eigen::VectorXd column_histogram(const GrayFrame& frame, int first, int last, int bin_count) {
  if (bin_count < 1 || bin_count > 256) throw std::invalid_argument("bin_count must be in [1, 256]");
  if (first > last || first < 0 || last >= frame.width()) {
    throw std::invalid_argument("column range [" + std::to_string(first) + ", " + std::to_string(last) +
                                "] is empty or outside the frame");
  }
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(bin_count);
  const auto block = frame.pixels().middleCols(first, last - first + 1);
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      counts(block(r, c) * bin_count / 256) += 1.0;
    }
  }
  return counts;
}

GrayDistribution gray_distribution(const GrayFrame& frame, int first, int last, int bin_count,
                                   double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
  return smoothed(column_histogram(frame, first, last, bin_count), epsilon);
}

KlSignal kl_signal(const GrayFrame& frame, const BoundarySet& b, Side side,
                   const RefinementParams& params) {
  if (!(b.d_left < b.d_center && b.d_center < b.d_right)) {
    throw std::invalid_argument("kl_signal: boundaries must satisfy d_left < d_center < d_right");
  }
  KlSignal s;
  s.side = side;
  s.first = side == Side::kLeft ? b.d_left : b.d_center;
  s.last = side == Side::kLeft ? b.d_center : b.d_right;
  s.raw.resize(s.length());

  const GrayDistribution center = gray_distribution(frame, b.d_center, b.d_center, params.bin_count, params.epsilon);
  if (params.mode == StripMode::kColumn) {
    for (int d = s.first; d <= s.last; ++d) {
      s.raw(d - s.first) = kl_divergence(gray_distribution(frame, d, d, params.bin_count, params.epsilon), center);
    }
    return s;
  }
  // Accumulate the strip outward-in, one column at a time.
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(params.bin_count);
  if (side == Side::kLeft) {
    for (int d = s.first; d <= s.last; ++d) {
      counts += column_histogram(frame, d, d, params.bin_count);
      s.raw(d - s.first) = kl_divergence(smoothed(counts, params.epsilon), center);
    }
  } else {
    for (int d = s.last; d >= s.first; --d) {
      counts += column_histogram(frame, d, d, params.bin_count);
      s.raw(d - s.first) = kl_divergence(smoothed(counts, params.epsilon), center);
    }
  }
  return s;
}

KlSignal apply_gaussian_weight(KlSignal s) {
  const double span = s.last - s.first;
  if (span <= 0.0) throw std::invalid_argument("gaussian weight: zero-width domain");
  if (s.raw.size() != s.length()) throw std::invalid_argument("gaussian weight: raw signal missing");
  s.mu = s.first + span / 2.0;
  s.sigma = span / 6.0;
  s.weighted.resize(s.raw.size());
  const double norm = 1.0 / (s.sigma * std::sqrt(2.0 * std::numbers::pi));
  for (int i = 0; i < s.length(); ++i) {
    const double z = (s.first + i - s.mu) / s.sigma;
    s.weighted(i) = norm * std::exp(-0.5 * z * z) * s.raw(i);
  }
  return s;
}

RefinedBoundary refine_boundary(const KlSignal& s) {
  const int n = s.length();
  if (n < 3) throw std::invalid_argument("refine_boundary: domain shorter than 3 columns");
  if (s.weighted.size() != n) throw std::invalid_argument("refine_boundary: signal not weighted");
  const Eigen::VectorXd& w = s.weighted;

  // Backward difference at local position i (1..n-1): w(i) - w(i-1). A rise
  // along the scan is a positive difference on the left side and a negative
  // one on the right side.
  const bool left = s.side == Side::kLeft;
  const double rise_sign = left ? 1.0 : -1.0;
  std::optional<int> best;
  double best_peak = -std::numeric_limits<double>::infinity();
  int prev = 0;  // sign of the last non-zero difference, in scan orientation
  for (int k = 0; k < n - 1; ++k) {
    const int i = left ? k + 1 : n - 1 - k;
    const double diff = rise_sign * (w(i) - w(i - 1));
    const int sign = (diff > 0.0) - (diff < 0.0);
    if (sign == 0) continue;
    if (prev > 0 && sign < 0) {
      const int peak = left ? i - 1 : i;
      if (w(peak) > best_peak) {
        best_peak = w(peak);
        best = i;
      }
    }
    prev = sign;
  }
  if (best) return {s.first + *best, false};
  Eigen::Index arg = 0;
  w.maxCoeff(&arg);
  return {s.first + static_cast<int>(arg), true};
}

Diameter map_to_mm(int refined_left, int refined_right, std::optional<double> mm_per_pixel) {
  if (refined_right <= refined_left) throw std::invalid_argument("map_to_mm: right boundary must exceed left");
  const double px = refined_right - refined_left;
  if (!mm_per_pixel) return {px, false};
  if (!(*mm_per_pixel > 0.0)) throw std::invalid_argument("map_to_mm: mm_per_pixel must be positive");
  return {px * *mm_per_pixel, true};
}

Measurement measure_onsd(const GrayFrame& frame, const MeasureParams& params,
                         const std::optional<BoundarySet>& coarse) {
  Measurement m;
  m.column_signal = column_sum_signal(frame);
  if (coarse) {
    m.bounds = *coarse;
    m.bounds.refined_left.reset();
    m.bounds.refined_right.reset();
    m.start_column = coarse->d_center;
  } else {
    m.gmm = staged("gmm", [&] { return gmm_fit_frame(frame, params.gmm); });
    const BinaryMask mask = foreground_mask(frame, m.gmm);
    m.kappa = staged("mass-midpoint", [&] { return cumulative_column_mass(mask); });
    m.start_column = staged("mass-midpoint", [&] { return mass_midpoint(mask); });
    m.bounds.d_center = staged("locate-center", [&] {
      // The walk needs an interior start.
      const int start = std::clamp(m.start_column, 1, frame.width() - 1);
      return locate_center(m.column_signal, start);
    });
    const FlankPeaks peaks = staged("flank-peaks", [&] {
      return find_flank_peaks(m.column_signal, m.bounds.d_center, params.peak_smoothing_window,
                              params.peak_min_rise);
    });
    m.bounds.d_left = peaks.left;
    m.bounds.d_right = peaks.right;
  }

  staged("refinement", [&] {
    m.left = apply_gaussian_weight(kl_signal(frame, m.bounds, Side::kLeft, params.refinement));
    m.right = apply_gaussian_weight(kl_signal(frame, m.bounds, Side::kRight, params.refinement));
    const RefinedBoundary l = refine_boundary(m.left);
    const RefinedBoundary r = refine_boundary(m.right);
    m.bounds.refined_left = l.index;
    m.bounds.refined_right = r.index;
    m.low_confidence = l.low_confidence || r.low_confidence;
    if (!m.bounds.valid()) throw std::domain_error("refined boundaries collapsed onto the center");
    return 0;
  });

  const Diameter px = map_to_mm(*m.bounds.refined_left, *m.bounds.refined_right, std::nullopt);
  m.width_px = px.value;
  if (frame.mm_per_pixel()) {
    m.width_mm = map_to_mm(*m.bounds.refined_left, *m.bounds.refined_right, frame.mm_per_pixel()).value;
  }
  return m;
}

std::string to_string(StripMode mode) {
  return mode == StripMode::kColumn ? "column" : "strip";
}

StripMode strip_mode_from_string(const std::string& s) {
  if (s == "column") return StripMode::kColumn;
  if (s == "strip") return StripMode::kAccumulated;
  throw ConfigError("unknown GL mode '" + s + "' (expected strip or column)");
}

}  // namespace onsd
