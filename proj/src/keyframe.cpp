#include "onsd/keyframe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "onsd/signal.hpp"

namespace onsd {

double entropy(const Eigen::Ref<const Eigen::VectorXd>& probabilities) {
  if (probabilities.size() == 0) throw std::invalid_argument("empty distribution");
  if ((probabilities.array() < 0.0).any() || !probabilities.allFinite()) {
    throw std::invalid_argument("probabilities must be finite and non-negative");
  }
  if (std::abs(probabilities.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("probabilities must sum to 1");
  }
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

double frame_entropy(const GrayFrame& frame) {
  std::array<long, 256> counts{};
  const auto& px = frame.pixels();
  for (Eigen::Index i = 0; i < px.size(); ++i) ++counts[px.data()[i]];
  Eigen::VectorXd p(256);
  const double n = static_cast<double>(px.size());
  for (int b = 0; b < 256; ++b) p(b) = static_cast<double>(counts[static_cast<std::size_t>(b)]) / n;
  return entropy(p / p.sum());
}

ScalarSeries entropy_series(const VideoSequence& seq) {
  ScalarSeries s{Eigen::VectorXd(seq.size()), SeriesOrigin::kEntropy};
  for (int i = 0; i < seq.size(); ++i) s.values(i) = frame_entropy(seq[i]);
  return s;
}

ScalarSeries smooth(const ScalarSeries& series, int window) {
  return {moving_average(series.values, window), SeriesOrigin::kSmoothed};
}

ScalarSeries difference(const ScalarSeries& series, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("difference order must be 1 or 2");
  return {forward_difference(series.values, order),
          order == 1 ? SeriesOrigin::kDiff1 : SeriesOrigin::kDiff2};
}

KeyframeSelection extract_keyframes(const ScalarSeries& series, int count,
                                    int min_separation, int smoothing_window) {
  const Eigen::Index n = series.values.size();
  if (count < 1) throw std::invalid_argument("keyframe count must be positive");
  if (n < count) throw std::invalid_argument("series shorter than keyframe count");
  if (min_separation < 0) throw std::invalid_argument("min_separation must be non-negative");

  const Eigen::VectorXd s = moving_average(series.values, smoothing_window);

  std::vector<int> peaks;
  for (Eigen::Index i = 1; i + 1 < n;) {
    if (s(i) > s(i - 1)) {
      Eigen::Index j = i;
      while (j + 1 < n && s(j + 1) == s(i)) ++j;
      if (j + 1 < n && s(j + 1) < s(i)) peaks.push_back(static_cast<int>(i));
      i = j + 1;
    } else {
      ++i;
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [&](int a, int b) { return s(a) > s(b); });

  KeyframeSelection sel;
  for (int p : peaks) {
    if (static_cast<int>(sel.indices.size()) == count) break;
    const bool far = std::all_of(sel.indices.begin(), sel.indices.end(),
                                 [&](int q) { return std::abs(p - q) >= min_separation; });
    if (far) sel.indices.push_back(p);
  }
  sel.shortfall = static_cast<int>(sel.indices.size()) < count;
  return sel;
}

}  // namespace onsd
