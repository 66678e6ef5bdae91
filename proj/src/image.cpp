#include "onsd/image.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace onsd {

GrayFrame::GrayFrame(PixelMatrix pixels, std::optional<double> mm_per_pixel)
    : pixels_(std::move(pixels)), mm_per_pixel_(mm_per_pixel) {
  if (pixels_.cols() < kMinFrameWidth || pixels_.rows() < kMinFrameHeight) {
    throw std::invalid_argument("frame " + std::to_string(pixels_.cols()) + "x" +
                                std::to_string(pixels_.rows()) +
                                " is smaller than the 6x3 minimum");
  }
  if (mm_per_pixel_ && !(*mm_per_pixel_ > 0.0)) {
    throw std::invalid_argument("mm_per_pixel must be strictly positive");
  }
}

BinaryMask::BinaryMask(int width, int height)
    : bits_(PixelMatrix::Zero(height, width)) {
  if (width < 0 || height < 0) throw std::invalid_argument("negative mask size");
}

BinaryMask::BinaryMask(PixelMatrix bits) : bits_(std::move(bits)) {
  const bool binary =
      ((bits_.array() == 0) || (bits_.array() == kOn)).all();
  if (!binary) throw std::invalid_argument("mask values must be 0 or 255");
}

long BinaryMask::count() const { return (bits_.array() == kOn).count(); }

VideoSequence::VideoSequence(std::vector<GrayFrame> frames,
                             std::optional<double> frame_rate)
    : frames_(std::move(frames)), frame_rate_(frame_rate) {
  if (frames_.empty()) throw std::invalid_argument("video sequence is empty");
  const GrayFrame& first = frames_.front();
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    const GrayFrame& f = frames_[i];
    if (f.width() != first.width() || f.height() != first.height()) {
      throw std::invalid_argument(
          "frame " + std::to_string(i) + " is " + std::to_string(f.width()) + "x" +
          std::to_string(f.height()) + ", expected " + std::to_string(first.width()) +
          "x" + std::to_string(first.height()));
    }
    if (f.mm_per_pixel() != first.mm_per_pixel()) {
      throw std::invalid_argument("frame " + std::to_string(i) +
                                  " has inconsistent calibration");
    }
  }
  if (frame_rate_ && !(*frame_rate_ > 0.0)) {
    throw std::invalid_argument("frame_rate must be strictly positive");
  }
}

GrayFrame crop(const GrayFrame& frame, const RoiBox& box) {
  const int x0 = std::max(box.x, 0);
  const int y0 = std::max(box.y, 0);
  const int x1 = std::min(box.x + box.w, frame.width());
  const int y1 = std::min(box.y + box.h, frame.height());
  if (x1 - x0 < kMinFrameWidth || y1 - y0 < kMinFrameHeight) {
    throw std::invalid_argument("ROI covers less than 6x3 pixels of the frame");
  }
  return GrayFrame(frame.pixels().block(y0, x0, y1 - y0, x1 - x0),
                   frame.mm_per_pixel());
}

namespace {

// Cell boundaries along one axis: cells of size extent/cells, last absorbs
// the remainder.
template <int Cells>
std::array<int, Cells + 1> cell_edges(int extent) {
  std::array<int, Cells + 1> edges{};
  const int step = extent / Cells;
  for (int i = 0; i < Cells; ++i) edges[static_cast<std::size_t>(i)] = i * step;
  edges[Cells] = extent;
  return edges;
}

}  // namespace

BinaryMask make_template(int width, int height) {
  if (width < kMinFrameWidth || height < kMinFrameHeight) {
    throw std::invalid_argument("template needs at least 6x3 pixels");
  }
  // r1..r18 row-major; 1-based ids of the hyperechoic cells.
  constexpr std::array<int, 7> kWhite = {1, 2, 3, 4, 6, 7, 9};
  const auto cols = cell_edges<6>(width);
  const auto rows = cell_edges<3>(height);

  BinaryMask mask(width, height);
  PixelMatrix bits = mask.bits();
  for (int id : kWhite) {
    const auto r = static_cast<std::size_t>((id - 1) / 6);
    const auto c = static_cast<std::size_t>((id - 1) % 6);
    bits.block(rows[r], cols[c], rows[r + 1] - rows[r], cols[c + 1] - cols[c])
        .setConstant(BinaryMask::kOn);
  }
  return BinaryMask(std::move(bits));
}

}  // namespace onsd
