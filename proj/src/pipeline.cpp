#include "onsd/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "onsd/errors.hpp"
#include "onsd/io.hpp"
#include "onsd/phantom.hpp"
#include "onsd/plot.hpp"

namespace onsd {

namespace {

using ordered_json = nlohmann::ordered_json;

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(s);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* end = t.data() + t.size();
  const auto [p, ec] = std::from_chars(t.data(), end, out);
  return ec == std::errc() && p == end;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("cannot write " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json vector_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd iota(Eigen::Index n, double start = 0.0) {
  return Eigen::VectorXd::LinSpaced(n, start, start + static_cast<double>(n) - 1.0);
}

template <typename F>
auto tag_stage(const char* stage, std::optional<int> frame, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PipelineError& e) {
    if (e.frame() || !frame) throw;
    throw PipelineError(e.stage(), e.message(), frame);
  } catch (const InputError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(stage, e.what(), frame);
  }
}

}  // namespace

ScoringParams PipelineConfig::default_scoring() {
  ScoringParams p;
  p.slic.target_clusters = 18;
  return p;
}

MeasureParams PipelineConfig::default_measure() {
  MeasureParams p;
  p.refinement.mode = StripMode::kColumn;
  return p;
}

void PipelineConfig::validate() const {
  const SlicParams& s = scoring.slic;
  require(s.target_clusters >= 1, "slic.clusters must be >= 1");
  require(s.compactness > 0.0, "slic.compactness must be positive");
  require(s.max_iters >= 1, "slic.max_iters must be >= 1");
  require(s.convergence_px >= 0.0, "slic.convergence_px must be non-negative");
  require(scoring.top_k >= 1, "slic.top_k must be >= 1");
  try {
    kcf.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const GmmParams& g = measure.gmm;
  require(g.components >= 1, "gmm.components must be >= 1");
  require(g.max_iters >= 1, "gmm.max_iters must be >= 1");
  require(g.tol >= 0.0, "gmm.tol must be non-negative");
  require(g.subsample >= 1, "gmm.subsample must be >= 1");
  require(g.variance_floor > 0.0, "gmm.variance_floor must be positive");
  require(measure.peak_smoothing_window >= 1 && measure.peak_smoothing_window % 2 == 1,
          "peaks.smoothing_window must be odd and >= 1");
  require(measure.peak_min_rise >= 0.0 && measure.peak_min_rise < 1.0, "peaks.min_rise must be in [0, 1)");
  require(measure.refinement.bin_count >= 1 && measure.refinement.bin_count <= 256,
          "refine.bins must be in [1, 256]");
  require(measure.refinement.epsilon > 0.0, "refine.epsilon must be positive");
  require(keyframes.count >= 1, "keyframes.count must be >= 1");
  require(keyframes.min_separation >= 1, "keyframes.min_separation must be >= 1");
  require(keyframes.smoothing_window >= 1 && keyframes.smoothing_window % 2 == 1,
          "keyframes.smoothing_window must be odd and >= 1");
  if (seed_box) require(seed_box->w > 0 && seed_box->h > 0, "seed_box needs positive width and height");
  require(!output_dir.empty(), "output_dir must not be empty");
}

KeyValues PipelineConfig::to_key_values() const {
  return {
      {"slic.clusters", std::to_string(scoring.slic.target_clusters)},
      {"slic.compactness", format_double(scoring.slic.compactness)},
      {"slic.max_iters", std::to_string(scoring.slic.max_iters)},
      {"slic.convergence_px", format_double(scoring.slic.convergence_px)},
      {"slic.top_k", std::to_string(scoring.top_k)},
      {"kcf.lambda", format_double(kcf.lambda)},
      {"kcf.kernel_sigma", format_double(kcf.kernel_sigma)},
      {"kcf.learning_rate", format_double(kcf.learning_rate)},
      {"kcf.padding", format_double(kcf.padding)},
      {"kcf.target_sigma_factor", format_double(kcf.target_sigma_factor)},
      {"kcf.cell_size", std::to_string(kcf.cell_size)},
      {"gmm.components", std::to_string(measure.gmm.components)},
      {"gmm.max_iters", std::to_string(measure.gmm.max_iters)},
      {"gmm.tol", format_double(measure.gmm.tol)},
      {"gmm.seed", std::to_string(measure.gmm.seed)},
      {"gmm.subsample", std::to_string(measure.gmm.subsample)},
      {"gmm.variance_floor", format_double(measure.gmm.variance_floor)},
      {"peaks.smoothing_window", std::to_string(measure.peak_smoothing_window)},
      {"peaks.min_rise", format_double(measure.peak_min_rise)},
      {"refine.bins", std::to_string(measure.refinement.bin_count)},
      {"refine.epsilon", format_double(measure.refinement.epsilon)},
      {"refine.gl_mode", to_string(measure.refinement.mode)},
      {"keyframes.count", std::to_string(keyframes.count)},
      {"keyframes.min_separation", std::to_string(keyframes.min_separation)},
      {"keyframes.smoothing_window", std::to_string(keyframes.smoothing_window)},
      {"seed_box", seed_box ? format_box(*seed_box) : ""},
  };
}

PipelineConfig PipelineConfig::from_key_values(const KeyValues& kv) {
  PipelineConfig c;
  const KeyValues known = c.to_key_values();
  for (const auto& [key, value] : kv) {
    if (key != "output_dir" && !known.count(key)) throw ConfigError("config: unknown key " + key);
  }
  read_value(kv, "slic.clusters", c.scoring.slic.target_clusters);
  read_value(kv, "slic.compactness", c.scoring.slic.compactness);
  read_value(kv, "slic.max_iters", c.scoring.slic.max_iters);
  read_value(kv, "slic.convergence_px", c.scoring.slic.convergence_px);
  read_value(kv, "slic.top_k", c.scoring.top_k);
  read_value(kv, "kcf.lambda", c.kcf.lambda);
  read_value(kv, "kcf.kernel_sigma", c.kcf.kernel_sigma);
  read_value(kv, "kcf.learning_rate", c.kcf.learning_rate);
  read_value(kv, "kcf.padding", c.kcf.padding);
  read_value(kv, "kcf.target_sigma_factor", c.kcf.target_sigma_factor);
  read_value(kv, "kcf.cell_size", c.kcf.cell_size);
  read_value(kv, "gmm.components", c.measure.gmm.components);
  read_value(kv, "gmm.max_iters", c.measure.gmm.max_iters);
  read_value(kv, "gmm.tol", c.measure.gmm.tol);
  unsigned long long seed = c.measure.gmm.seed;
  read_value(kv, "gmm.seed", seed);
  c.measure.gmm.seed = seed;
  read_value(kv, "gmm.subsample", c.measure.gmm.subsample);
  read_value(kv, "gmm.variance_floor", c.measure.gmm.variance_floor);
  read_value(kv, "peaks.smoothing_window", c.measure.peak_smoothing_window);
  read_value(kv, "peaks.min_rise", c.measure.peak_min_rise);
  read_value(kv, "refine.bins", c.measure.refinement.bin_count);
  read_value(kv, "refine.epsilon", c.measure.refinement.epsilon);
  if (auto it = kv.find("refine.gl_mode"); it != kv.end()) {
    c.measure.refinement.mode = strip_mode_from_string(it->second);
  }
  read_value(kv, "keyframes.count", c.keyframes.count);
  read_value(kv, "keyframes.min_separation", c.keyframes.min_separation);
  read_value(kv, "keyframes.smoothing_window", c.keyframes.smoothing_window);
  if (auto it = kv.find("seed_box"); it != kv.end() && !trim(it->second).empty()) {
    c.seed_box = parse_box(it->second);
  }
  read_value(kv, "output_dir", c.output_dir);
  c.validate();
  return c;
}

RoiBox parse_box(const std::string& text) {
  const auto parts = split(text, ',');
  RoiBox b;
  if (parts.size() != 4 || !parse_number(parts[0], b.x) || !parse_number(parts[1], b.y) ||
      !parse_number(parts[2], b.w) || !parse_number(parts[3], b.h)) {
    throw ConfigError("seed box '" + text + "' is not x,y,w,h");
  }
  if (b.w <= 0 || b.h <= 0) throw ConfigError("seed box '" + text + "' needs positive width and height");
  return b;
}

std::string format_box(const RoiBox& box) {
  return std::to_string(box.x) + "," + std::to_string(box.y) + "," + std::to_string(box.w) + "," +
         std::to_string(box.h);
}

double MeasurementReport::optimal_dice() const {
  for (const auto& s : selection.scores) {
    if (s.frame_index == selection.optimal_index) return s.dice;
  }
  return 0.0;
}

MeasurementReport measure_video(const VideoSequence& seq, const std::string& video_id,
                                const PipelineConfig& config, int jobs) {
  config.validate();
  if (!config.seed_box) throw InputError(video_id + ": no seed box given and no phantom record found");

  MeasurementReport r;
  r.video_id = video_id;
  r.width = seq.width();
  r.height = seq.height();
  r.mm_per_pixel = seq.mm_per_pixel();
  r.frame_rate = seq.frame_rate();
  r.config = config;

  r.boxes = tag_stage("tracking", 0, [&] { return track_sequence(seq, *config.seed_box, config.kcf); });
  r.selection = tag_stage("frame-selection", std::nullopt,
                          [&] { return select_optimal_frame(seq, r.boxes, config.scoring, jobs); });
  const int best = r.selection.optimal_index;
  r.measurement = tag_stage("measurement", best, [&] { return measure_onsd(seq[best], config.measure); });

  r.entropy = tag_stage("keyframes", std::nullopt, [&] { return entropy_series(seq); });
  r.keyframes = tag_stage("keyframes", std::nullopt, [&] {
    // Short videos cap the window (largest odd <= length) and the count.
    const int n = seq.size();
    const int window = std::min(config.keyframes.smoothing_window, n % 2 == 1 ? n : n - 1);
    const int count = std::min(config.keyframes.count, n);
    return extract_keyframes(r.entropy, count, config.keyframes.min_separation, window);
  });
  return r;
}

MeasurementReport measure_directory(const std::filesystem::path& dir, PipelineConfig config, int jobs) {
  const VideoSequence seq = load_sequence(dir);
  if (!config.seed_box) {
    const auto truth_path = dir / "truth.json";
    if (!std::filesystem::exists(truth_path)) {
      throw InputError(dir.string() + ": no seed box given and no truth.json phantom record found");
    }
    const PhantomTruth truth = truth_from_json(read_text(truth_path));
    if (truth.frames.empty()) throw InputError(truth_path.string() + " records no frames");
    config.seed_box = truth.frames.front().roi;
  }
  return measure_video(seq, dir.filename().string(), config, jobs);
}

std::string report_to_json(const MeasurementReport& r) {
  const Measurement& m = r.measurement;
  ordered_json j;
  j["video_id"] = r.video_id;
  j["frames"] = r.frame_count();
  j["width"] = r.width;
  j["height"] = r.height;
  j["mm_per_pixel"] = optional_number(r.mm_per_pixel);
  j["frame_rate"] = optional_number(r.frame_rate);
  j["optimal_frame"] = {{"index", r.selection.optimal_index}, {"dice", r.optimal_dice()}};
  j["keyframes"] = {{"indices", r.keyframes.indices}, {"shortfall", r.keyframes.shortfall}};
  j["boundaries"] = {{"d_left", m.bounds.d_left},
                     {"d_center", m.bounds.d_center},
                     {"d_right", m.bounds.d_right},
                     {"refined_left", *m.bounds.refined_left},
                     {"refined_right", *m.bounds.refined_right}};
  j["onsd_px"] = m.width_px;
  j["onsd_mm"] = optional_number(m.width_mm);
  j["low_confidence"] = m.low_confidence;

  ordered_json diag;
  diag["mass_midpoint"] = m.start_column;
  diag["gmm"] = {{"weights", vector_json(m.gmm.weights)},
                 {"means", vector_json(m.gmm.means)},
                 {"variances", vector_json(m.gmm.variances)},
                 {"iterations", m.gmm.iterations},
                 {"log_likelihood", m.gmm.log_likelihood}};
  for (const auto* s : {&m.left, &m.right}) {
    diag[s->side == Side::kLeft ? "kl_left" : "kl_right"] = {
        {"first", s->first}, {"last", s->last}, {"mu", s->mu}, {"sigma", s->sigma}};
  }
  j["diagnostics"] = diag;

  ordered_json scores = ordered_json::array();
  for (const auto& s : r.selection.scores) scores.push_back({{"frame_index", s.frame_index}, {"dice", s.dice}});
  j["frame_scores"] = scores;

  ordered_json config;
  for (const auto& [k, v] : r.config.to_key_values()) config[k] = v;
  j["config"] = config;
  return j.dump(2) + "\n";
}

void write_report_files(const MeasurementReport& r, const std::filesystem::path& dir, bool dump_signals) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", report_to_json(r));

  std::ostringstream scores;
  scores << "frame_index,dice\n";
  for (const auto& s : r.selection.scores) scores << s.frame_index << ',' << format_double(s.dice) << '\n';
  write_text(dir / "scores.csv", scores.str());

  std::ostringstream boxes;
  boxes << "frame_index,x,y,w,h\n";
  for (std::size_t i = 0; i < r.boxes.size(); ++i) {
    const RoiBox& b = r.boxes[i];
    boxes << i << ',' << b.x << ',' << b.y << ',' << b.w << ',' << b.h << '\n';
  }
  write_text(dir / "boxes.csv", boxes.str());

  std::ostringstream entropy;
  entropy << "frame_index,entropy_bits\n";
  for (Eigen::Index i = 0; i < r.entropy.values.size(); ++i) {
    entropy << i << ',' << format_double(r.entropy.values(i)) << '\n';
  }
  write_text(dir / "entropy.csv", entropy.str());

  Eigen::VectorXd dice(static_cast<Eigen::Index>(r.selection.scores.size()));
  for (std::size_t i = 0; i < r.selection.scores.size(); ++i) {
    dice(static_cast<Eigen::Index>(i)) = r.selection.scores[i].dice;
  }
  write_text(dir / "scores.svg",
             render_svg({"Frame score (" + r.video_id + ")", "frame", "Dice",
                         {{"dice", iota(dice.size()), dice, false}}, {},
                         {static_cast<double>(r.selection.optimal_index)}}));
  std::vector<double> keyframes(r.keyframes.indices.begin(), r.keyframes.indices.end());
  write_text(dir / "entropy.svg",
             render_svg({"Frame entropy (" + r.video_id + ")", "frame", "entropy (bits)",
                         {{"entropy", iota(r.entropy.values.size()), r.entropy.values, false}}, {},
                         keyframes}));

  if (!dump_signals) return;
  const Measurement& m = r.measurement;
  std::ostringstream signal;
  signal << "n,v,kappa\n";
  for (Eigen::Index n = 0; n < m.column_signal.size(); ++n) {
    signal << n << ',' << format_double(m.column_signal(n)) << ',' << format_double(m.kappa(n)) << '\n';
  }
  write_text(dir / "signal.csv", signal.str());
  for (const auto* s : {&m.left, &m.right}) {
    std::ostringstream kl;
    kl << "d,raw,weighted\n";
    for (Eigen::Index i = 0; i < s->raw.size(); ++i) {
      kl << s->first + i << ',' << format_double(s->raw(i)) << ',' << format_double(s->weighted(i)) << '\n';
    }
    write_text(dir / (s->side == Side::kLeft ? "kl_left.csv" : "kl_right.csv"), kl.str());
  }

  const double peak = m.column_signal.size() > 0 ? m.column_signal.maxCoeff() : 0.0;
  const Eigen::VectorXd v = peak > 0.0 ? Eigen::VectorXd(m.column_signal / peak) : m.column_signal;
  write_text(dir / "signal.svg",
             render_svg({"Column signal (normalized) and cumulative mass", "column", "value",
                         {{"v / max v", iota(v.size()), v, false}, {"kappa", iota(m.kappa.size()), m.kappa, false}},
                         {},
                         {static_cast<double>(m.bounds.d_left), static_cast<double>(m.bounds.d_center),
                          static_cast<double>(m.bounds.d_right)}}));
  write_text(dir / "kl.svg",
             render_svg({"Position KL signals", "column", "KL (nats)",
                         {{"left raw", iota(m.left.raw.size(), m.left.first), m.left.raw, false},
                          {"left weighted", iota(m.left.weighted.size(), m.left.first), m.left.weighted, false},
                          {"right raw", iota(m.right.raw.size(), m.right.first), m.right.raw, false},
                          {"right weighted", iota(m.right.weighted.size(), m.right.first), m.right.weighted, false}},
                         {},
                         {static_cast<double>(*m.bounds.refined_left),
                          static_cast<double>(*m.bounds.refined_right)}}));
}

std::vector<std::filesystem::path> find_videos(const std::filesystem::path& input) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(input)) throw InputError(input.string() + " is not a directory");
  const auto has_frames = [](const fs::path& dir) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".pgm") return true;
    }
    return false;
  };
  if (has_frames(input)) return {input};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(input)) {
    if (e.is_directory() && has_frames(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError(input.string() + " contains no PGM frames");
  return out;
}

std::string batch_index_json(const std::vector<BatchEntry>& entries) {
  ordered_json videos = ordered_json::array();
  for (const auto& e : entries) {
    ordered_json v;
    v["video_id"] = e.video_id;
    v["status"] = e.status;
    v["exit_code"] = e.exit_code;
    if (e.exit_code == 0) {
      v["report"] = e.video_id + "/report.json";
      v["optimal_frame"] = e.optimal_frame;
      v["onsd_px"] = optional_number(e.onsd_px);
      v["onsd_mm"] = optional_number(e.onsd_mm);
    } else {
      v["error"] = e.error;
    }
    videos.push_back(v);
  }
  ordered_json j;
  j["videos"] = videos;
  return j.dump(2) + "\n";
}

MeasurementSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  MeasurementSeries s;
  s.label = path.stem().string();
  std::vector<double> values;
  std::set<std::string> seen;
  std::string line;
  bool first = true;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    line = trim(line);
    if (line.empty()) continue;
    const bool header = first && line == "id,value";
    first = false;
    if (header) continue;
    const auto fields = split(line, ',');
    double value = 0.0;
    if (fields.size() != 2 || trim(fields[0]).empty() || !parse_number(fields[1], value) ||
        !std::isfinite(value)) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected id,value");
    }
    const std::string id = trim(fields[0]);
    if (!seen.insert(id).second) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": duplicate id " + id);
    }
    s.ids.push_back(id);
    values.push_back(value);
  }
  if (s.ids.empty()) throw InputError(path.string() + " holds no measurements");
  s.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return s;
}

AlignedSeries align_series(const MeasurementSeries& candidate, const MeasurementSeries& reference) {
  std::map<std::string, double> ref;
  for (std::size_t i = 0; i < reference.ids.size(); ++i) {
    ref[reference.ids[i]] = reference.values(static_cast<Eigen::Index>(i));
  }
  const std::set<std::string> cand(candidate.ids.begin(), candidate.ids.end());
  const auto join = [](const std::vector<std::string>& ids) {
    std::string s;
    for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
    return s;
  };
  std::vector<std::string> missing_ref;
  std::vector<std::string> missing_cand;
  for (const auto& id : candidate.ids) {
    if (!ref.count(id)) missing_ref.push_back(id);
  }
  for (const auto& id : reference.ids) {
    if (!cand.count(id)) missing_cand.push_back(id);
  }
  if (!missing_ref.empty() || !missing_cand.empty()) {
    std::string msg = "series ids do not match";
    if (!missing_ref.empty()) msg += "; missing from " + reference.label + ": " + join(missing_ref);
    if (!missing_cand.empty()) msg += "; missing from " + candidate.label + ": " + join(missing_cand);
    throw InputError(msg);
  }
  AlignedSeries out;
  out.ids = candidate.ids;
  out.candidate = candidate.values;
  out.reference.resize(candidate.values.size());
  for (std::size_t i = 0; i < out.ids.size(); ++i) out.reference(static_cast<Eigen::Index>(i)) = ref[out.ids[i]];
  return out;
}

std::string agreement_to_json(const AgreementReport& r, const AlignedSeries& data) {
  ordered_json j;
  j["n"] = r.n;
  j["ids"] = data.ids;
  j["mean_error_percent"] = r.mean_error;
  j["mse"] = r.mse;
  j["mse_conventional"] = r.mse_conventional;
  j["icc"] = {{"form", "ICC(2,1)"},
              {"value", r.icc.icc},
              {"ci95_low", r.icc.ci_low},
              {"ci95_high", r.icc.ci_high},
              {"degenerate", r.icc.degenerate},
              {"ms_rows", r.icc.ms_rows},
              {"ms_cols", r.icc.ms_cols},
              {"ms_error", r.icc.ms_error}};
  j["bland_altman"] = {{"bias", r.bland_altman.bias},
                       {"sd", r.bland_altman.sd},
                       {"loa_low", r.bland_altman.loa_low},
                       {"loa_high", r.bland_altman.loa_high}};
  j["cohens_d"] = optional_number(r.cohens_d);
  return j.dump(2) + "\n";
}

std::string bland_altman_csv(const AgreementReport& r, const AlignedSeries& data) {
  std::ostringstream o;
  o << "id,mean,difference\n";
  for (std::size_t i = 0; i < data.ids.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    o << data.ids[i] << ',' << format_double(r.bland_altman.means(k)) << ','
      << format_double(r.bland_altman.differences(k)) << '\n';
  }
  return o.str();
}

std::string bland_altman_svg(const AgreementReport& r) {
  const BlandAltman& ba = r.bland_altman;
  return render_svg({"Bland-Altman", "mean of pair", "candidate - reference",
                     {{"pairs", ba.means, ba.differences, true}},
                     {{"bias", ba.bias}, {"-1.96 sd", ba.loa_low}, {"+1.96 sd", ba.loa_high}},
                     {}});
}

}  // namespace onsd
