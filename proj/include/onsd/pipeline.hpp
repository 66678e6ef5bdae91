#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "onsd/evaluation.hpp"
#include "onsd/image.hpp"
#include "onsd/keyframe.hpp"
#include "onsd/keyvalue.hpp"
#include "onsd/refinement.hpp"
#include "onsd/superpixel.hpp"
#include "onsd/tracking.hpp"

namespace onsd {

struct KeyframeParams {
  int count = 2;
  int min_separation = 5;
  int smoothing_window = 5;
};

/// Every tunable of the measurement pipeline. Defaults differ from the
/// per-module defaults in two places: frame scoring segments into 18
/// superpixels (one per template cell) and boundary refinement compares
/// single columns.
struct PipelineConfig {
  ScoringParams scoring = default_scoring();
  KcfParams kcf;
  MeasureParams measure = default_measure();
  KeyframeParams keyframes;
  std::optional<RoiBox> seed_box;
  std::string output_dir = "onsd_out";

  /// Throws ConfigError naming the first out-of-range value.
  void validate() const;

  /// Sorted `key=value` pairs; output_dir is omitted since it never affects
  /// the results. from_key_values rejects unknown keys and validates.
  KeyValues to_key_values() const;
  static PipelineConfig from_key_values(const KeyValues& kv);

  static ScoringParams default_scoring();
  static MeasureParams default_measure();
};

/// Parses `x,y,w,h`. Throws ConfigError.
RoiBox parse_box(const std::string& text);
std::string format_box(const RoiBox& box);

struct MeasurementReport {
  std::string video_id;
  int width = 0;
  int height = 0;
  std::optional<double> mm_per_pixel;
  std::optional<double> frame_rate;
  std::vector<RoiBox> boxes;  // tracked ROI per frame
  FrameSelection selection;
  ScalarSeries entropy;
  KeyframeSelection keyframes;
  Measurement measurement;  // on the optimal frame
  PipelineConfig config;    // with the resolved seed box

  int frame_count() const { return static_cast<int>(boxes.size()); }
  double optimal_dice() const;
};

/// Tracking, frame scoring, measurement on the optimal frame and entropy
/// keyframes. config.seed_box must be set. Every failure surfaces as a
/// PipelineError naming the stage and, where one applies, the frame.
MeasurementReport measure_video(const VideoSequence& seq, const std::string& video_id,
                                const PipelineConfig& config, int jobs = 1);

/// Loads a frame directory and resolves the seed box: the configured one, or
/// else the first-frame ROI of a `truth.json` phantom record beside the
/// frames. Throws InputError when neither exists.
MeasurementReport measure_directory(const std::filesystem::path& dir, PipelineConfig config,
                                    int jobs = 1);

/// Report JSON with the config echo; byte-stable for identical input.
std::string report_to_json(const MeasurementReport& report);

/// Writes report.json, scores/boxes/entropy CSVs and SVG plots into `dir`.
/// With `dump_signals`, also signal.csv (n,v,kappa), kl_left.csv and
/// kl_right.csv (d,raw,weighted) plus their plots.
void write_report_files(const MeasurementReport& report, const std::filesystem::path& dir,
                        bool dump_signals);

/// Frame directories under `input`: `input` itself when it holds `.pgm`
/// files, else each immediate subdirectory that does, sorted by name.
std::vector<std::filesystem::path> find_videos(const std::filesystem::path& input);

struct BatchEntry {
  std::string video_id;
  std::string status;  // "ok" or the error category
  int exit_code = 0;
  std::string error;
  std::optional<double> onsd_px;
  std::optional<double> onsd_mm;
  int optimal_frame = -1;
};

std::string batch_index_json(const std::vector<BatchEntry>& entries);

/// `id,value` CSV, header optional. Throws InputError on malformed rows or
/// duplicate ids.
MeasurementSeries read_series_csv(const std::filesystem::path& path);

struct AlignedSeries {
  std::vector<std::string> ids;
  Eigen::VectorXd candidate;
  Eigen::VectorXd reference;
};

/// Pairs values by id in the candidate's order. Throws InputError listing the
/// ids missing from either side.
AlignedSeries align_series(const MeasurementSeries& candidate, const MeasurementSeries& reference);

std::string agreement_to_json(const AgreementReport& report, const AlignedSeries& data);
/// `id,mean,difference` rows.
std::string bland_altman_csv(const AgreementReport& report, const AlignedSeries& data);
std::string bland_altman_svg(const AgreementReport& report);

}  // namespace onsd
