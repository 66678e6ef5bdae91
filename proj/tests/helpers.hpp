#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "onsd/image.hpp"
#include "onsd/phantom.hpp"

namespace onsd::test {

template <typename F>
GrayFrame frame_from(int width, int height, F&& pixel, std::optional<double> mm_per_pixel = std::nullopt) {
  PixelMatrix p(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) p(y, x) = static_cast<std::uint8_t>(pixel(x, y));
  }
  return GrayFrame(std::move(p), mm_per_pixel);
}

inline GrayFrame random_frame(int width, int height, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, 255);
  return frame_from(width, height, [&](int, int) { return u(rng); });
}

inline GrayFrame constant_frame(int width, int height, int value) {
  return frame_from(width, height, [&](int, int) { return value; });
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("onsd_test_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Phantom laid out for template matching: flanks as wide as the sheath, so
/// each of the six template columns covers one structure, an echogenic patch
/// in the last column and the ROI box starting 4 px from the frame edge.
/// Needs 7 W + 4 <= 256.
inline PhantomSpec selection_phantom(int sheath_width) {
  PhantomSpec s;
  const int w = sheath_width;
  s.sheath_width = w;
  s.flank_width = w;
  s.flank_taper = 0.15;
  s.cap_depth = w;
  s.flank_depth = 2 * w;
  s.cap_margin = w;
  s.patch = true;
  s.sheath_center = w + 4 + 1.5 * w;
  return s;
}

/// Rightward drift (px/frame, at most 1) that keeps a selection phantom's
/// ROI box inside the frame for n frames.
inline double selection_phantom_max_drift(const PhantomSpec& s, int n) {
  const int x0 = s.sheath_width + 4;
  return std::min(1.0, std::max(0, s.width - (x0 + 6 * s.sheath_width)) / static_cast<double>(n));
}

/// Phantom for measurement accuracy: flanks half the sheath width, the
/// structure centered in the frame and the cap margin half the remaining room.
inline PhantomSpec accuracy_phantom(int sheath_width) {
  PhantomSpec s;
  const int w = sheath_width;
  const int f = (w + 1) / 2;
  s.sheath_width = w;
  s.flank_width = f;
  s.cap_depth = w;
  s.flank_depth = 2 * w;
  const int x0 = (s.width - (w + 2 * f)) / 2;
  s.cap_margin = x0 / 2;
  s.sheath_center = x0 + f + w / 2.0;
  return s;
}

/// Drift (px/frame, at most 1) that keeps an accuracy phantom's fat cap
/// inside the frame for n frames.
inline double accuracy_phantom_max_drift(const PhantomSpec& s, int n) {
  const int x0 = (s.width - (s.sheath_width + 2 * s.flank_width)) / 2;
  return std::min(1.0, std::max(0, x0 - s.cap_margin - 1) / static_cast<double>(n));
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace onsd::test
