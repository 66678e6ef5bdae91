#include "onsd/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "onsd/errors.hpp"

namespace onsd {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("phantom spec: " + what);
}

bool is_intensity(double v) { return v >= 0.0 && v <= 255.0; }

int sheath_left(const PhantomSpec& spec, int frame) {
  const double center = spec.sheath_center + spec.drift * frame;
  return static_cast<int>(std::lround(center - spec.sheath_width / 2.0));
}

// Full (unclipped) width of the ROI box.
int box_width(const PhantomSpec& spec) { return 2 * (spec.sheath_width + 2 * spec.flank_width); }

}  // namespace

void PhantomSpec::validate() const {
  require(width >= kMinFrameWidth && height >= kMinFrameHeight, "frame too small");
  require(sheath_width > 0 && sheath_width < width, "sheath_width must be in (0, width)");
  require(flank_width > 0, "flank_width must be positive");
  require(flank_taper >= 0.0 && flank_taper <= 1.0, "flank_taper must be in [0, 1]");
  require(flank_depth > 0 && flank_depth <= height, "flank_depth must be in (0, height]");
  require(cap_depth >= 0 && cap_depth <= flank_depth, "cap_depth must be in [0, flank_depth]");
  require(cap_margin >= 0, "cap_margin must be non-negative");
  require(is_intensity(fat_mean) && is_intensity(sheath_mean) && is_intensity(background_mean) &&
              is_intensity(patch_mean),
          "intensities must lie in [0, 255]");
  require(fat_mean > sheath_mean, "fat_mean must exceed sheath_mean");
  require(fat_mean > background_mean, "fat_mean must exceed background_mean");
  require(fat_sigma >= 0.0 && sheath_sigma >= 0.0 && speckle_sigma >= 0.0,
          "noise sigmas must be non-negative");
  require(clean_frame_index >= 0, "clean_frame_index must be non-negative");
  require(mm_per_pixel > 0.0, "mm_per_pixel must be positive");
  require(frame_rate > 0.0, "frame_rate must be positive");
}

KeyValues PhantomSpec::to_key_values() const {
  return {
      {"width", std::to_string(width)},
      {"height", std::to_string(height)},
      {"sheath_width", std::to_string(sheath_width)},
      {"sheath_center", format_double(sheath_center)},
      {"flank_width", std::to_string(flank_width)},
      {"flank_taper", format_double(flank_taper)},
      {"flank_depth", std::to_string(flank_depth)},
      {"cap_depth", std::to_string(cap_depth)},
      {"cap_margin", std::to_string(cap_margin)},
      {"fat_mean", format_double(fat_mean)},
      {"fat_sigma", format_double(fat_sigma)},
      {"sheath_mean", format_double(sheath_mean)},
      {"sheath_sigma", format_double(sheath_sigma)},
      {"background_mean", format_double(background_mean)},
      {"patch", patch ? "true" : "false"},
      {"patch_mean", format_double(patch_mean)},
      {"speckle_sigma", format_double(speckle_sigma)},
      {"drift", format_double(drift)},
      {"clean_frame_index", std::to_string(clean_frame_index)},
      {"mm_per_pixel", format_double(mm_per_pixel)},
      {"frame_rate", format_double(frame_rate)},
  };
}

PhantomSpec PhantomSpec::from_key_values(const KeyValues& kv) {
  PhantomSpec s;
  for (const auto& [key, value] : kv) {
    if (!s.to_key_values().count(key)) throw ConfigError("phantom spec: unknown key " + key);
  }
  read_value(kv, "width", s.width);
  read_value(kv, "height", s.height);
  read_value(kv, "sheath_width", s.sheath_width);
  read_value(kv, "sheath_center", s.sheath_center);
  read_value(kv, "flank_width", s.flank_width);
  read_value(kv, "flank_taper", s.flank_taper);
  read_value(kv, "flank_depth", s.flank_depth);
  read_value(kv, "cap_depth", s.cap_depth);
  read_value(kv, "cap_margin", s.cap_margin);
  read_value(kv, "fat_mean", s.fat_mean);
  read_value(kv, "fat_sigma", s.fat_sigma);
  read_value(kv, "sheath_mean", s.sheath_mean);
  read_value(kv, "sheath_sigma", s.sheath_sigma);
  read_value(kv, "background_mean", s.background_mean);
  read_value(kv, "patch", s.patch);
  read_value(kv, "patch_mean", s.patch_mean);
  read_value(kv, "speckle_sigma", s.speckle_sigma);
  read_value(kv, "drift", s.drift);
  read_value(kv, "clean_frame_index", s.clean_frame_index);
  read_value(kv, "mm_per_pixel", s.mm_per_pixel);
  read_value(kv, "frame_rate", s.frame_rate);
  s.validate();
  return s;
}

Phantom generate_phantom(const PhantomSpec& spec, int n_frames, std::uint64_t seed) {
  spec.validate();
  if (n_frames < 1) throw ConfigError("phantom needs at least one frame");
  if (spec.clean_frame_index >= n_frames) {
    throw ConfigError("clean_frame_index " + std::to_string(spec.clean_frame_index) +
                      " is outside the " + std::to_string(n_frames) + "-frame video");
  }

  PhantomTruth truth;
  truth.spec = spec;
  truth.n_frames = n_frames;
  truth.seed = seed;

  const int W = spec.sheath_width;
  const int F = spec.flank_width;
  for (int f = 0; f < n_frames; ++f) {
    const int left = sheath_left(spec, f);
    if (left - F < 0 || left + W + F > spec.width) {
      throw ConfigError("drift moves the sheath out of frame at frame " + std::to_string(f));
    }
    PhantomFrameTruth t;
    t.left_edge = left;
    t.right_edge = left + W;
    t.center = left + W / 2.0;
    // The fat body fills the left half of the box, so its cells line up with
    // the echogenicity template when flank and sheath widths agree.
    const int x0 = left - F;
    const int x1 = std::min(spec.width, x0 + box_width(spec));
    t.roi = RoiBox{x0, 0, x1 - x0, std::min(spec.height, spec.flank_depth * 3 / 2)};
    truth.frames.push_back(t);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<GrayFrame> frames;
  frames.reserve(static_cast<std::size_t>(n_frames));
  // Per-column mean of the flank bands, background elsewhere.
  std::vector<double> flank_mean(static_cast<std::size_t>(spec.width));
  std::vector<bool> is_sheath(static_cast<std::size_t>(spec.width));

  for (int f = 0; f < n_frames; ++f) {
    const PhantomFrameTruth& t = truth.frames[static_cast<std::size_t>(f)];
    const double speckle = f == spec.clean_frame_index ? 0.0 : spec.speckle_sigma;
    const int cap_x0 = t.left_edge - F - spec.cap_margin;
    const int cap_x1 = t.right_edge + F + spec.cap_margin;
    const int patch_x0 = t.left_edge - F + box_width(spec) / 6 * 5;
    const int patch_x1 = t.left_edge - F + box_width(spec);

    for (int x = 0; x < spec.width; ++x) {
      double mean = -1.0;
      int offset = -1;
      if (x >= t.left_edge - F && x < t.left_edge) offset = x - (t.left_edge - F);
      if (x >= t.right_edge && x < t.right_edge + F) offset = x - t.right_edge;
      if (offset >= 0) {
        const double u = std::abs(2.0 * (offset + 0.5) / F - 1.0);
        mean = spec.fat_mean - spec.flank_taper * u * (spec.fat_mean - spec.background_mean);
      }
      flank_mean[static_cast<std::size_t>(x)] = mean;
      is_sheath[static_cast<std::size_t>(x)] = x >= t.left_edge && x < t.right_edge;
    }

    PixelMatrix pixels(spec.height, spec.width);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const auto xi = static_cast<std::size_t>(x);
        double mean = is_sheath[xi] ? spec.sheath_mean : spec.background_mean;
        double sigma = spec.sheath_sigma;
        if (y < spec.cap_depth && x >= cap_x0 && x < cap_x1) {
          mean = spec.fat_mean;
          sigma = spec.fat_sigma;
        } else if (y < spec.flank_depth && flank_mean[xi] >= 0.0) {
          mean = flank_mean[xi];
          sigma = spec.fat_sigma;
        } else if (spec.patch && y < spec.cap_depth && x >= patch_x0 && x < patch_x1) {
          mean = spec.patch_mean;
        }
        double v = mean;
        if (sigma > 0.0) v += sigma * unit(rng);
        if (speckle > 0.0) v += speckle * unit(rng);
        pixels(y, x) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
    frames.emplace_back(std::move(pixels), spec.mm_per_pixel);
  }

  return Phantom{VideoSequence(std::move(frames), spec.frame_rate), std::move(truth)};
}

std::string truth_to_json(const PhantomTruth& truth) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json spec;
  for (const auto& [k, v] : truth.spec.to_key_values()) spec[k] = v;
  j["spec"] = spec;
  j["n_frames"] = truth.n_frames;
  j["seed"] = truth.seed;
  j["clean_frame_index"] = truth.spec.clean_frame_index;
  j["true_width_px"] = truth.spec.sheath_width;
  j["true_width_mm"] = truth.true_width_mm();
  j["mm_per_pixel"] = truth.spec.mm_per_pixel;
  auto& frames = j["frames"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < truth.frames.size(); ++i) {
    const auto& t = truth.frames[i];
    frames.push_back({{"index", i},
                      {"center", t.center},
                      {"left_edge", t.left_edge},
                      {"right_edge", t.right_edge},
                      {"roi", {t.roi.x, t.roi.y, t.roi.w, t.roi.h}}});
  }
  return j.dump(2) + "\n";
}

PhantomTruth truth_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    PhantomTruth truth;
    KeyValues kv;
    for (const auto& [k, v] : j.at("spec").items()) kv[k] = v.get<std::string>();
    truth.spec = PhantomSpec::from_key_values(kv);
    truth.n_frames = j.at("n_frames").get<int>();
    truth.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& f : j.at("frames")) {
      PhantomFrameTruth t;
      t.center = f.at("center").get<double>();
      t.left_edge = f.at("left_edge").get<int>();
      t.right_edge = f.at("right_edge").get<int>();
      const auto& r = f.at("roi");
      t.roi = RoiBox{r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>(),
                     r.at(3).get<int>()};
      truth.frames.push_back(t);
    }
    return truth;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("ground truth JSON: ") + e.what());
  }
}

}  // namespace onsd
