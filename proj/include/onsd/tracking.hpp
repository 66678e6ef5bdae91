#pragma once

#include <Eigen/Core>
#include <vector>

#include "onsd/image.hpp"

namespace onsd {

struct KcfParams {
  double lambda = 1e-4;
  double kernel_sigma = 0.5;   // Gaussian kernel bandwidth on normalized features
  double learning_rate = 0.02;
  double padding = 2.5;        // search window = padding x target size
  double target_sigma_factor = 0.1;  // label bandwidth = sqrt(w h) * factor
  int cell_size = 2;  // features are cell_size x cell_size pixel means

  void validate() const;
};

/// Single-sequence KCF model. Translation only, fixed box size.
struct TrackerState {
  KcfParams params;
  RoiBox box;
  double cx = 0.0;  // current target center, pixels
  double cy = 0.0;
  int window_w = 0;  // search window, cells
  int window_h = 0;
  Eigen::MatrixXd cos_window;
  Eigen::MatrixXcd label_f;      // FFT of the Gaussian target response
  Eigen::MatrixXd appearance;    // windowed feature patch
  Eigen::MatrixXcd appearance_f;
  Eigen::MatrixXcd alpha_f;      // dual coefficients, frequency domain
  int frame_width = 0;
  int frame_height = 0;
};

struct KcfStep {
  TrackerState state;
  RoiBox box;
};

/// Throws std::invalid_argument if the seed does not intersect the frame or
/// the parameters are out of range.
TrackerState kcf_init(const GrayFrame& frame, const RoiBox& seed, const KcfParams& params = {});

/// Moves the box to the response peak (clamped to the frame) and blends the
/// model with rate learning_rate.
KcfStep kcf_update(TrackerState state, const GrayFrame& frame);

/// Response map of the current model over the search window around the
/// current center, in cells. Peak at (window_h/2, window_w/2) means no motion.
Eigen::MatrixXd kcf_response(const TrackerState& state, const GrayFrame& frame);

/// Raised-cosine-windowed patch of normalized cell-mean intensities centered
/// at (cx, cy), with replicated borders.
Eigen::MatrixXd windowed_patch(const GrayFrame& frame, double cx, double cy,
                               const Eigen::MatrixXd& cos_window, int cell_size = 1);

/// Boxes for every frame; frame 0 gets the seed.
std::vector<RoiBox> track_sequence(const VideoSequence& seq, const RoiBox& seed,
                                   const KcfParams& params = {});

}  // namespace onsd
