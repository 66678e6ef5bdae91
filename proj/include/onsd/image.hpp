#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace onsd {

/// Row-major 8-bit pixel storage; rows() is the image height.
using PixelMatrix =
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kMinFrameWidth = 6;
inline constexpr int kMinFrameHeight = 3;

/// Single-channel 8-bit ultrasound frame with optional physical calibration.
/// Immutable after construction.
class GrayFrame {
 public:
  /// Throws std::invalid_argument if smaller than 6x3 or if the calibration
  /// is not strictly positive.
  explicit GrayFrame(PixelMatrix pixels,
                     std::optional<double> mm_per_pixel = std::nullopt);

  int width() const { return static_cast<int>(pixels_.cols()); }
  int height() const { return static_cast<int>(pixels_.rows()); }
  std::uint8_t at(int row, int col) const { return pixels_(row, col); }
  const PixelMatrix& pixels() const { return pixels_; }
  std::optional<double> mm_per_pixel() const { return mm_per_pixel_; }

  GrayFrame with_calibration(std::optional<double> mm_per_pixel) const {
    return GrayFrame(pixels_, mm_per_pixel);
  }

  friend bool operator==(const GrayFrame& a, const GrayFrame& b) {
    return a.pixels_ == b.pixels_ && a.mm_per_pixel_ == b.mm_per_pixel_;
  }

 private:
  PixelMatrix pixels_;
  std::optional<double> mm_per_pixel_;
};

/// Binary image with values restricted to {0, 255}.
class BinaryMask {
 public:
  static constexpr std::uint8_t kOn = 255;

  BinaryMask(int width, int height);
  /// Throws std::invalid_argument if any value is outside {0, 255}.
  explicit BinaryMask(PixelMatrix bits);

  int width() const { return static_cast<int>(bits_.cols()); }
  int height() const { return static_cast<int>(bits_.rows()); }
  bool on(int row, int col) const { return bits_(row, col) == kOn; }
  void set(int row, int col, bool value) { bits_(row, col) = value ? kOn : 0; }
  const PixelMatrix& bits() const { return bits_; }
  long count() const;

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.bits_ == b.bits_;
  }

 private:
  PixelMatrix bits_;
};

/// Ordered frames sharing dimensions and calibration.
class VideoSequence {
 public:
  /// Throws std::invalid_argument when empty or when frames disagree in
  /// size or calibration.
  explicit VideoSequence(std::vector<GrayFrame> frames,
                         std::optional<double> frame_rate = std::nullopt);

  int size() const { return static_cast<int>(frames_.size()); }
  const GrayFrame& operator[](int i) const { return frames_[static_cast<std::size_t>(i)]; }
  const std::vector<GrayFrame>& frames() const { return frames_; }
  int width() const { return frames_.front().width(); }
  int height() const { return frames_.front().height(); }
  std::optional<double> mm_per_pixel() const { return frames_.front().mm_per_pixel(); }
  std::optional<double> frame_rate() const { return frame_rate_; }

 private:
  std::vector<GrayFrame> frames_;
  std::optional<double> frame_rate_;
};

/// Axis-aligned box; x, y is the top-left pixel.
struct RoiBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  double center_x() const { return x + w / 2.0; }
  double center_y() const { return y + h / 2.0; }
  long area() const { return static_cast<long>(w) * h; }
  bool intersects(int width, int height) const {
    return w > 0 && h > 0 && x < width && y < height && x + w > 0 && y + h > 0;
  }

  friend bool operator==(const RoiBox&, const RoiBox&) = default;
};

/// Intersection of the box with the frame, cropped out. Throws
/// std::invalid_argument if the intersection is smaller than 6x3.
GrayFrame crop(const GrayFrame& frame, const RoiBox& box);

/// 3x6 echogenicity template. Cells are numbered row-major (r1..r6 on the top
/// row); r1-r4, r6, r7 and r9 are white. Cell width is width/6 (floor) with
/// the last column absorbing the remainder; rows likewise.
BinaryMask make_template(int width, int height);

}  // namespace onsd
