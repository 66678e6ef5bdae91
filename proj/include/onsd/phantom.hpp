#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "onsd/image.hpp"
#include "onsd/keyvalue.hpp"

namespace onsd {

/// Geometry and appearance of a synthetic optic-nerve-sheath video.
///
/// Each frame has a dark sheath band of `sheath_width` columns flanked by two
/// bright fat bands of `flank_width` columns that reach `flank_depth` rows
/// down. Flank brightness peaks mid-band and falls by `flank_taper` of the
/// fat/background contrast toward both band edges. A bright fat cap of
/// `cap_depth` rows spans the flanks plus `cap_margin` on each side; the rest
/// is background. With `patch` set, a moderately echogenic patch
/// (`patch_mean`, `cap_depth` rows) fills the last sixth of the ROI box's
/// width, so a speckle-free frame matches the echogenicity template. Fat and
/// dark pixels carry per-pixel tissue noise
/// (`fat_sigma`, `sheath_sigma`); every frame except `clean_frame_index`
/// additionally carries speckle (`speckle_sigma`).
struct PhantomSpec {
  int width = 256;
  int height = 192;
  int sheath_width = 36;
  double sheath_center = 94.0;  // column of the sheath center on frame 0
  int flank_width = 36;
  double flank_taper = 0.3;
  int flank_depth = 72;
  int cap_depth = 36;
  int cap_margin = 36;
  double fat_mean = 190.0;
  double fat_sigma = 4.0;
  double sheath_mean = 50.0;
  double sheath_sigma = 4.0;
  double background_mean = 30.0;
  bool patch = false;
  double patch_mean = 80.0;
  double speckle_sigma = 15.0;
  double drift = 0.0;  // lateral sheath motion, px/frame
  int clean_frame_index = 0;
  double mm_per_pixel = 0.05;
  double frame_rate = 30.0;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  KeyValues to_key_values() const;
  static PhantomSpec from_key_values(const KeyValues& kv);
};

struct PhantomFrameTruth {
  double center = 0.0;
  int left_edge = 0;   // first sheath column
  int right_edge = 0;  // one past the last sheath column
  RoiBox roi;          // fat body plus an equal width to its right
};

struct PhantomTruth {
  PhantomSpec spec;
  int n_frames = 0;
  std::uint64_t seed = 0;
  std::vector<PhantomFrameTruth> frames;

  int clean_frame_index() const { return spec.clean_frame_index; }
  double true_width_px() const { return spec.sheath_width; }
  double true_width_mm() const { return spec.sheath_width * spec.mm_per_pixel; }
};

struct Phantom {
  VideoSequence video;
  PhantomTruth truth;
};

/// Pure function of (spec, n_frames, seed). Throws ConfigError for an invalid
/// spec or when drift carries the sheath or its flanks out of the frame.
Phantom generate_phantom(const PhantomSpec& spec, int n_frames, std::uint64_t seed);

/// Ground-truth record as a JSON document.
std::string truth_to_json(const PhantomTruth& truth);
PhantomTruth truth_from_json(const std::string& text);

}  // namespace onsd
