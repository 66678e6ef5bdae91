#pragma once

#include <Eigen/Core>
#include <vector>

#include "onsd/image.hpp"

namespace onsd {

enum class SeriesOrigin { kEntropy, kSmoothed, kDiff1, kDiff2, kRaw };

struct ScalarSeries {
  Eigen::VectorXd values;
  SeriesOrigin origin = SeriesOrigin::kRaw;
};

/// Shannon entropy in bits, with 0 log 0 = 0. Throws std::invalid_argument
/// unless the probabilities are non-negative and sum to 1 within 1e-9.
double entropy(const Eigen::Ref<const Eigen::VectorXd>& probabilities);

/// Entropy of the normalized 256-bin intensity histogram.
double frame_entropy(const GrayFrame& frame);

ScalarSeries entropy_series(const VideoSequence& seq);

ScalarSeries smooth(const ScalarSeries& series, int window);

/// order 1: s[i+1] - s[i]; order 2: the first difference applied twice.
ScalarSeries difference(const ScalarSeries& series, int order);

struct KeyframeSelection {
  std::vector<int> indices;  // ranked by smoothed height, highest first
  bool shortfall = false;    // fewer qualifying peaks than requested
};

/// Interior local maxima of the smoothed series, taken greedily by height
/// (ties to the lower index) subject to pairwise separation >= min_separation.
/// A plateau counts as one peak at its first index.
KeyframeSelection extract_keyframes(const ScalarSeries& series, int count,
                                    int min_separation, int smoothing_window = 1);

}  // namespace onsd
