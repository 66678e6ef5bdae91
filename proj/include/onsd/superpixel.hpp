#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "onsd/image.hpp"

namespace onsd {

using LabelMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-pixel cluster labels in [0, cluster_count). After realign_labels,
/// cluster_intensity[c] holds the exact sum of member intensities.
struct SuperpixelLabeling {
  LabelMatrix labels;
  int cluster_count = 0;
  std::vector<std::int64_t> cluster_intensity;
};

struct SlicParams {
  int target_clusters = 100;
  double compactness = 10.0;
  int max_iters = 10;
  double convergence_px = 0.5;  // stop once no center moves this far
};

/// SLIC over (intensity, x, y). Seeds sit on a regular grid with step
/// S = sqrt(area / target_clusters); each center searches a 2S x 2S window
/// with distance sqrt(dI^2 + (m/S)^2 ds^2). Afterwards every label is made a
/// single 4-connected component by merging stray fragments into their
/// largest neighbouring segment, and labels are renumbered in raster order.
SuperpixelLabeling slic_segment(const GrayFrame& frame, const SlicParams& params);

/// Fills cluster_intensity; labels are unchanged.
SuperpixelLabeling realign_labels(const GrayFrame& frame, SuperpixelLabeling labeling);

/// White pixels for the k clusters with the largest realigned intensity,
/// ties to the lower cluster id. Requires 1 <= k <= cluster_count.
BinaryMask binarize_top_k(const SuperpixelLabeling& labeling, int k);

/// 2|Y n Yhat| / (|Y| + |Yhat|). Throws if sizes differ or both are empty.
double dice_score(const BinaryMask& y, const BinaryMask& y_hat);

struct FrameScore {
  int frame_index = 0;
  double dice = 0.0;
};

struct ScoringParams {
  SlicParams slic;
  int top_k = 7;
};

struct FrameSelection {
  int optimal_index = 0;
  std::vector<FrameScore> scores;
};

/// Dice between the top-k superpixel mask of `roi_crop` and the echogenicity
/// template at the crop's size. k is capped at the number of clusters found.
double score_frame(const GrayFrame& roi_crop, const ScoringParams& params);

/// Scores every frame inside its ROI and returns the argmax (ties to the
/// lowest index). Throws PipelineError naming the frame for a degenerate ROI.
FrameSelection select_optimal_frame(const VideoSequence& seq, std::span<const RoiBox> rois,
                                     const ScoringParams& params, int jobs = 1);

}  // namespace onsd
