#include "onsd/localization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "onsd/signal.hpp"

namespace onsd {

namespace {

double log_normal_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * d * d / variance;
}

// Fills `resp` (n x C) with posterior responsibilities and returns the data
// log-likelihood.
double e_step(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& w,
              const Eigen::VectorXd& mu, const Eigen::VectorXd& var, Eigen::MatrixXd& resp) {
  const Eigen::Index n = x.size();
  const Eigen::Index k = mu.size();
  resp.resize(n, k);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < k; ++c) {
      resp(i, c) = std::log(w(c)) + log_normal_pdf(x(i), mu(c), var(c));
      top = std::max(top, resp(i, c));
    }
    double sum = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
      resp(i, c) = std::exp(resp(i, c) - top);
      sum += resp(i, c);
    }
    resp.row(i) /= sum;
    ll += top + std::log(sum);
  }
  return ll;
}

}  // namespace

int GmmModel::brightest() const {
  Eigen::Index best = 0;
  means.maxCoeff(&best);
  return static_cast<int>(best);
}

double GmmModel::posterior(int c, double x) const {
  const Eigen::Index k = means.size();
  Eigen::VectorXd logp(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    logp(j) = std::log(weights(j)) + log_normal_pdf(x, means(j), variances(j));
  }
  const double top = logp.maxCoeff();
  return std::exp(logp(c) - top) / (logp.array() - top).exp().sum();
}

GmmModel gmm_fit(const Eigen::Ref<const Eigen::VectorXd>& data, int components, int max_iters,
                 double tol, double variance_floor) {
  if (components < 1) throw std::invalid_argument("gmm: components must be positive");
  if (max_iters < 1) throw std::invalid_argument("gmm: max_iters must be positive");
  if (!(variance_floor > 0.0)) throw std::invalid_argument("gmm: variance floor must be positive");
  const Eigen::Index n = data.size();

  std::vector<double> sorted(data.data(), data.data() + n);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (static_cast<int>(distinct.size()) < components) {
    throw std::domain_error("gmm: data has " + std::to_string(distinct.size()) +
                            " distinct value(s), fewer than " + std::to_string(components) +
                            " components; fit a single component instead");
  }

  const int k = components;
  auto quantiles = [k](const std::vector<double>& v) {
    Eigen::VectorXd q(k);
    for (int c = 0; c < k; ++c) {
      const auto idx = static_cast<std::size_t>((c + 0.5) / k * static_cast<double>(v.size()));
      q(c) = v[std::min(idx, v.size() - 1)];
    }
    return q;
  };
  GmmModel m;
  m.means = quantiles(sorted);
  for (int c = 1; c < k; ++c) {
    if (m.means(c) == m.means(c - 1)) {
      m.means = quantiles(distinct);
      break;
    }
  }
  const double mean = data.mean();
  const double var = (data.array() - mean).square().mean();
  m.variances = Eigen::VectorXd::Constant(k, std::max(var, variance_floor));
  m.weights = Eigen::VectorXd::Constant(k, 1.0 / k);

  Eigen::MatrixXd resp;
  double ll = e_step(data, m.weights, m.means, m.variances, resp);
  m.log_likelihood_trace.push_back(ll);
  for (int it = 1; it <= max_iters; ++it) {
    const Eigen::VectorXd nk = resp.colwise().sum().transpose();
    for (int c = 0; c < k; ++c) {
      if (nk(c) <= 0.0) continue;  // empty component keeps its parameters
      m.weights(c) = nk(c) / static_cast<double>(n);
      m.means(c) = resp.col(c).dot(data) / nk(c);
      m.variances(c) =
          std::max(resp.col(c).dot((data.array() - m.means(c)).square().matrix()) / nk(c), variance_floor);
    }
    m.weights /= m.weights.sum();
    const double next = e_step(data, m.weights, m.means, m.variances, resp);
    m.log_likelihood_trace.push_back(next);
    m.iterations = it;
    const double gain = next - ll;
    ll = next;
    if (gain < tol) break;
  }
  m.log_likelihood = ll;
  return m;
}

GmmModel gmm_fit_frame(const GrayFrame& frame, const GmmParams& params) {
  if (params.subsample < 1) throw std::invalid_argument("gmm: subsample must be positive");
  const auto& px = frame.pixels();
  const Eigen::Index stride = params.subsample;
  const Eigen::Index offset = static_cast<Eigen::Index>(params.seed % static_cast<std::uint64_t>(stride));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(px.size() / stride + 1));
  for (Eigen::Index i = offset; i < px.size(); i += stride) values.push_back(px.data()[i]);
  return gmm_fit(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())),
                 params.components, params.max_iters, params.tol, params.variance_floor);
}

BinaryMask foreground_mask(const GrayFrame& frame, const GmmModel& model) {
  const int fg = model.brightest();
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    lut[static_cast<std::size_t>(v)] = model.posterior(fg, v) >= 0.5 ? BinaryMask::kOn : 0;
  }
  PixelMatrix bits = frame.pixels().unaryExpr([&](std::uint8_t v) { return lut[v]; });
  return BinaryMask(std::move(bits));
}

Eigen::VectorXd cumulative_column_mass(const BinaryMask& mask) {
  const Eigen::VectorXd mass = (mask.bits().array() == BinaryMask::kOn).cast<double>().colwise().sum().transpose();
  const double total = mass.sum();
  if (total == 0.0) throw std::domain_error("mass midpoint: mask has no foreground pixels");
  Eigen::VectorXd kappa(mass.size());
  double run = 0.0;
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    run += mass(i);
    kappa(i) = run / total;
  }
  return kappa;
}

int mass_midpoint(const BinaryMask& mask) {
  const auto on = (mask.bits().array() == BinaryMask::kOn);
  const long total = on.count();
  if (total == 0) throw std::domain_error("mass midpoint: mask has no foreground pixels");
  long run = 0;
  for (int n = 0; n < mask.width(); ++n) {
    run += on.col(n).count();
    if (2 * run >= total) return n;
  }
  return mask.width() - 1;
}

int locate_center(const Eigen::Ref<const Eigen::VectorXd>& v, int d_start) {
  const int n = static_cast<int>(v.size());
  if (d_start <= 0 || d_start >= n) throw std::invalid_argument("locate_center: start must be in (0, N)");
  int d = d_start;
  for (int step = 0; step <= n; ++step) {
    if (d <= 0 || d >= n - 1) throw std::domain_error("locate_center: no interior trough");
    if (v(d) - v(d - 1) > 0.0) {
      --d;
    } else if (v(d + 1) - v(d) < 0.0) {
      ++d;
    } else {
      return d;
    }
  }
  throw std::domain_error("locate_center: no interior trough within N steps");
}

FlankPeaks find_flank_peaks(const Eigen::Ref<const Eigen::VectorXd>& v, int d_center,
                            int smoothing_window, double min_rise) {
  const int n = static_cast<int>(v.size());
  if (d_center <= 0 || d_center >= n - 1) throw std::invalid_argument("flank peaks: center must be interior");
  const Eigen::VectorXd s = moving_average(v, smoothing_window);
  const double threshold = min_rise * (s.maxCoeff() - s.minCoeff());

  // Past the plateau end j, does the signal reach `level` before rising above
  // the peak?
  auto falls_after = [&](int j, int dir, double level) {
    const double peak = s(j);
    for (int k = j + dir; k >= 0 && k < n; k += dir) {
      if (s(k) > peak) return false;
      if (s(k) <= level) return true;
    }
    return false;
  };

  // dir = -1 scans leftwards, +1 rightwards.
  auto scan = [&](int dir) -> std::optional<int> {
    double lowest = s(d_center);
    for (int i = d_center + dir; i > 0 && i < n - 1; i += dir) {
      lowest = std::min(lowest, s(i));
      if (!(s(i) > s(i - dir))) continue;
      int j = i;
      while (j + dir > 0 && j + dir < n - 1 && s(j + dir) == s(i)) j += dir;
      const int beyond = j + dir;
      if (beyond < 0 || beyond >= n) return std::nullopt;
      if (s(beyond) < s(i) && s(i) - lowest >= threshold && falls_after(j, dir, s(i) - threshold)) return i;
      i = j;
    }
    return std::nullopt;
  };

  const auto left = scan(-1);
  const auto right = scan(+1);
  if (!left && !right) throw std::domain_error("flank peaks: no interior peak on either side");
  if (!left) throw std::domain_error("flank peaks: no interior peak on the left side");
  if (!right) throw std::domain_error("flank peaks: no interior peak on the right side");
  return {*left, *right};
}

bool BoundarySet::valid() const {
  if (!(d_left < d_center && d_center < d_right)) return false;
  if (refined_left.has_value() != refined_right.has_value()) return false;
  if (refined_left) {
    return d_left <= *refined_left && *refined_left < *refined_right && *refined_right <= d_right;
  }
  return true;
}

}  // namespace onsd
