#include "onsd/tracking.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace onsd {

namespace {

// Smallest n' >= n whose only prime factors are 2, 3 and 5.
int fft_friendly(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

Eigen::MatrixXcd fft2(const Eigen::MatrixXcd& in, bool inverse) {
  thread_local Eigen::FFT<double> fft;
  Eigen::MatrixXcd out(in.rows(), in.cols());
  Eigen::VectorXcd src;
  Eigen::VectorXcd dst;
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    src = in.row(r).transpose();
    if (inverse) {
      fft.inv(dst, src);
    } else {
      fft.fwd(dst, src);
    }
    out.row(r) = dst.transpose();
  }
  for (Eigen::Index c = 0; c < in.cols(); ++c) {
    src = out.col(c);
    if (inverse) {
      fft.inv(dst, src);
    } else {
      fft.fwd(dst, src);
    }
    out.col(c) = dst;
  }
  return out;
}

Eigen::MatrixXcd fft2(const Eigen::MatrixXd& in) { return fft2(in.cast<std::complex<double>>().eval(), false); }

Eigen::MatrixXd ifft2_real(const Eigen::MatrixXcd& in) { return fft2(in, true).real(); }

Eigen::VectorXd hann(int n) {
  Eigen::VectorXd w(n);
  if (n == 1) {
    w(0) = 1.0;
    return w;
  }
  for (int i = 0; i < n; ++i) w(i) = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
  return w;
}

// Gaussian kernel correlation of every cyclic shift of z against x, returned
// in the frequency domain.
Eigen::MatrixXcd gaussian_correlation(const Eigen::MatrixXcd& xf, const Eigen::MatrixXcd& zf,
                                      double xx, double zz, double sigma) {
  const double numel = static_cast<double>(xf.size());
  const Eigen::MatrixXd xz = ifft2_real(xf.conjugate().cwiseProduct(zf));
  const Eigen::MatrixXd d = ((xx + zz) - 2.0 * xz.array()).max(0.0) / numel;
  return fft2((-d.array() / (sigma * sigma)).exp().matrix().eval());
}

Eigen::MatrixXcd train(const TrackerState& s, const Eigen::MatrixXd& x, const Eigen::MatrixXcd& xf) {
  const double xx = x.squaredNorm();
  const Eigen::MatrixXcd kf = gaussian_correlation(xf, xf, xx, xx, s.params.kernel_sigma);
  return s.label_f.array() / (kf.array() + s.params.lambda);
}

// Parabolic refinement of a response peak along one axis, in (-0.5, 0.5).
double subcell_offset(const Eigen::MatrixXd& resp, Eigen::Index r, Eigen::Index c, bool vertical) {
  const Eigen::Index n = vertical ? resp.rows() : resp.cols();
  if (n < 3) return 0.0;
  const Eigen::Index i = vertical ? r : c;
  const auto at = [&](Eigen::Index k) {
    k = (k + n) % n;
    return vertical ? resp(k, c) : resp(r, k);
  };
  const double left = at(i - 1);
  const double mid = at(i);
  const double right = at(i + 1);
  const double curvature = left - 2.0 * mid + right;
  if (!(curvature < 0.0)) return 0.0;
  return std::clamp(0.5 * (left - right) / curvature, -0.5, 0.5);
}

RoiBox box_at(const TrackerState& s) {
  RoiBox b = s.box;
  b.x = static_cast<int>(std::lround(s.cx - b.w / 2.0));
  b.y = static_cast<int>(std::lround(s.cy - b.h / 2.0));
  return b;
}

// Keeps the box inside the frame; a box larger than the frame is pinned to
// the top-left corner.
void clamp_to_frame(TrackerState& s) {
  RoiBox b = box_at(s);
  b.x = std::clamp(b.x, 0, std::max(0, s.frame_width - b.w));
  b.y = std::clamp(b.y, 0, std::max(0, s.frame_height - b.h));
  s.cx = b.x + b.w / 2.0;
  s.cy = b.y + b.h / 2.0;
  s.box = b;
}

}  // namespace

void KcfParams::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("kcf: lambda must be positive");
  if (!(kernel_sigma > 0.0)) throw std::invalid_argument("kcf: kernel_sigma must be positive");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw std::invalid_argument("kcf: learning_rate must be in (0, 1]");
  }
  if (!(padding >= 1.0)) throw std::invalid_argument("kcf: padding must be >= 1");
  if (!(target_sigma_factor > 0.0)) throw std::invalid_argument("kcf: target_sigma_factor must be positive");
  if (cell_size < 1) throw std::invalid_argument("kcf: cell_size must be positive");
}

Eigen::MatrixXd windowed_patch(const GrayFrame& frame, double cx, double cy,
                               const Eigen::MatrixXd& cos_window, int cell_size) {
  if (cell_size < 1) throw std::invalid_argument("kcf: cell_size must be positive");
  const int ph = static_cast<int>(cos_window.rows());
  const int pw = static_cast<int>(cos_window.cols());
  const int cell = cell_size;
  const int x0 = static_cast<int>(std::lround(cx)) - pw * cell / 2;
  const int y0 = static_cast<int>(std::lround(cy)) - ph * cell / 2;
  std::vector<int> xs(static_cast<std::size_t>(pw * cell));
  for (int i = 0; i < pw * cell; ++i) xs[static_cast<std::size_t>(i)] = std::clamp(x0 + i, 0, frame.width() - 1);
  const auto& px = frame.pixels();
  Eigen::MatrixXd patch = Eigen::MatrixXd::Zero(ph, pw);
  for (int r = 0; r < ph * cell; ++r) {
    const int y = std::clamp(y0 + r, 0, frame.height() - 1);
    const std::uint8_t* row = px.data() + static_cast<Eigen::Index>(y) * px.cols();
    for (int c = 0; c < pw * cell; ++c) patch(r / cell, c / cell) += row[xs[static_cast<std::size_t>(c)]];
  }
  patch /= 255.0 * cell * cell;
  return patch.cwiseProduct(cos_window);
}

TrackerState kcf_init(const GrayFrame& frame, const RoiBox& seed, const KcfParams& params) {
  params.validate();
  if (!seed.intersects(frame.width(), frame.height())) {
    throw std::invalid_argument("kcf: seed box lies outside the frame");
  }
  TrackerState s;
  s.params = params;
  s.box = seed;
  s.cx = seed.center_x();
  s.cy = seed.center_y();
  s.frame_width = frame.width();
  s.frame_height = frame.height();
  const int cell = params.cell_size;
  s.window_w = fft_friendly(static_cast<int>(std::lround(seed.w * params.padding / cell)));
  s.window_h = fft_friendly(static_cast<int>(std::lround(seed.h * params.padding / cell)));
  s.cos_window = hann(s.window_h) * hann(s.window_w).transpose();

  const double sigma = std::sqrt(static_cast<double>(seed.w) * seed.h) * params.target_sigma_factor / cell;
  Eigen::MatrixXd y(s.window_h, s.window_w);
  const int r0 = s.window_h / 2;
  const int c0 = s.window_w / 2;
  for (int r = 0; r < s.window_h; ++r) {
    for (int c = 0; c < s.window_w; ++c) {
      const double d2 = (r - r0) * (r - r0) + (c - c0) * (c - c0);
      y(r, c) = std::exp(-0.5 * d2 / (sigma * sigma));
    }
  }
  s.label_f = fft2(y);
  s.appearance = windowed_patch(frame, s.cx, s.cy, s.cos_window, cell);
  s.appearance_f = fft2(s.appearance);
  s.alpha_f = train(s, s.appearance, s.appearance_f);
  return s;
}

Eigen::MatrixXd kcf_response(const TrackerState& s, const GrayFrame& frame) {
  if (frame.width() != s.frame_width || frame.height() != s.frame_height) {
    throw std::invalid_argument("kcf: frame size differs from the initial frame");
  }
  const Eigen::MatrixXd z = windowed_patch(frame, s.cx, s.cy, s.cos_window, s.params.cell_size);
  const Eigen::MatrixXcd kf = gaussian_correlation(s.appearance_f, fft2(z), s.appearance.squaredNorm(),
                                                   z.squaredNorm(), s.params.kernel_sigma);
  return ifft2_real(s.alpha_f.cwiseProduct(kf));
}

KcfStep kcf_update(TrackerState s, const GrayFrame& frame) {
  const Eigen::MatrixXd response = kcf_response(s, frame);
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  const double peak = response.maxCoeff(&r, &c);
  const double floor = response.minCoeff();
  // A flat response carries no position information.
  if (peak - floor > 1e-12 * std::max(1.0, std::abs(peak))) {
    const double dc = c + subcell_offset(response, r, c, false) - s.window_w / 2;
    const double dr = r + subcell_offset(response, r, c, true) - s.window_h / 2;
    s.cx += dc * s.params.cell_size;
    s.cy += dr * s.params.cell_size;
  }
  clamp_to_frame(s);

  const Eigen::MatrixXd x = windowed_patch(frame, s.cx, s.cy, s.cos_window, s.params.cell_size);
  const Eigen::MatrixXcd xf = fft2(x);
  const Eigen::MatrixXcd alpha = train(s, x, xf);
  const double eta = s.params.learning_rate;
  s.appearance = (1.0 - eta) * s.appearance + eta * x;
  s.appearance_f = (1.0 - eta) * s.appearance_f + eta * xf;
  s.alpha_f = (1.0 - eta) * s.alpha_f + eta * alpha;
  const RoiBox box = s.box;
  return {std::move(s), box};
}

std::vector<RoiBox> track_sequence(const VideoSequence& seq, const RoiBox& seed,
                                   const KcfParams& params) {
  std::vector<RoiBox> boxes;
  boxes.reserve(static_cast<std::size_t>(seq.size()));
  TrackerState state = kcf_init(seq[0], seed, params);
  boxes.push_back(seed);
  for (int i = 1; i < seq.size(); ++i) {
    KcfStep step = kcf_update(std::move(state), seq[i]);
    state = std::move(step.state);
    boxes.push_back(step.box);
  }
  return boxes;
}

}  // namespace onsd
