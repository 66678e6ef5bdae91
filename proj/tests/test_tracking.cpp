#include "doctest.h"
#include "helpers.hpp"
#include "onsd/phantom.hpp"
#include "onsd/tracking.hpp"

#include <cmath>
#include <numbers>

using namespace onsd;

namespace {

GrayFrame square_at(double cx, double cy, int w = 128, int h = 96) {
  return onsd::test::frame_from(w, h, [&](int x, int y) {
    return std::abs(x + 0.5 - cx) <= 12 && std::abs(y + 0.5 - cy) <= 12 ? 220 : 20;
  });
}

RoiBox box_around(double cx, double cy) { return RoiBox{static_cast<int>(cx) - 12, static_cast<int>(cy) - 12, 24, 24}; }

double hann_value(int i, int n) { return n == 1 ? 1.0 : 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1)); }

}  // namespace

TEST_SUITE("tracking") {
  TEST_CASE("updating on the training frame keeps the box") {
    const GrayFrame f = square_at(60, 40);
    const TrackerState s = kcf_init(f, box_around(60, 40));
    const KcfStep step = kcf_update(s, f);
    CHECK(step.box == box_around(60, 40));
  }

  TEST_CASE("the training patch responds most strongly at the window center") {
    const GrayFrame f = square_at(60, 40);
    const TrackerState s = kcf_init(f, box_around(60, 40));
    Eigen::Index r = 0;
    Eigen::Index c = 0;
    kcf_response(s, f).maxCoeff(&r, &c);
    CHECK(r == s.window_h / 2);
    CHECK(c == s.window_w / 2);
  }

  TEST_CASE("an all-zero frame gives a finite model and a flat response") {
    const GrayFrame f = onsd::test::constant_frame(64, 48, 0);
    const TrackerState s = kcf_init(f, RoiBox{20, 10, 16, 16});
    CHECK(s.alpha_f.allFinite());
    const Eigen::MatrixXd resp = kcf_response(s, f);
    CHECK(resp.allFinite());
    CHECK(resp.maxCoeff() - resp.minCoeff() < 1e-9);
    CHECK(kcf_update(s, f).box == (RoiBox{20, 10, 16, 16}));
  }

  TEST_CASE("the stored appearance equals an independently windowed crop") {
    const Phantom p = generate_phantom(PhantomSpec{}, 1, 3);
    const GrayFrame& f = p.video[0];
    const RoiBox seed = p.truth.frames[0].roi;
    const TrackerState s = kcf_init(f, seed);
    const int cell = s.params.cell_size;
    const int x0 = static_cast<int>(std::lround(s.cx)) - s.window_w * cell / 2;
    const int y0 = static_cast<int>(std::lround(s.cy)) - s.window_h * cell / 2;
    for (int r = 0; r < s.window_h; ++r) {
      for (int c = 0; c < s.window_w; ++c) {
        double sum = 0.0;
        for (int dy = 0; dy < cell; ++dy) {
          for (int dx = 0; dx < cell; ++dx) {
            const int y = std::clamp(y0 + r * cell + dy, 0, f.height() - 1);
            const int x = std::clamp(x0 + c * cell + dx, 0, f.width() - 1);
            sum += f.at(y, x);
          }
        }
        const double expected = sum / (255.0 * cell * cell) * hann_value(r, s.window_h) * hann_value(c, s.window_w);
        REQUIRE(s.appearance(r, c) == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("a static target does not drift") {
    const GrayFrame f = square_at(64, 48);
    std::vector<GrayFrame> frames(10, f);
    const auto boxes = track_sequence(VideoSequence(frames), box_around(64, 48));
    for (const auto& b : boxes) CHECK(b == box_around(64, 48));
  }

  TEST_CASE("a square moving 3 px per frame is followed within 2 px") {
    std::vector<GrayFrame> frames;
    for (int i = 0; i < 10; ++i) frames.push_back(square_at(40 + 3 * i, 48));
    const auto boxes = track_sequence(VideoSequence(frames), box_around(40, 48));
    for (int i = 0; i < 10; ++i) {
      CAPTURE(i);
      CHECK(std::abs(boxes[static_cast<std::size_t>(i)].center_x() - (40 + 3 * i)) <= 2.0);
      CHECK(std::abs(boxes[static_cast<std::size_t>(i)].center_y() - 48) <= 2.0);
    }
  }

  TEST_CASE("a target leaving the frame pins the box to the border") {
    std::vector<GrayFrame> frames;
    for (int i = 0; i < 20; ++i) frames.push_back(square_at(100 + 4 * i, 48));
    const auto boxes = track_sequence(VideoSequence(frames), box_around(100, 48));
    for (const auto& b : boxes) {
      CHECK(b.w == 24);
      CHECK(b.h == 24);
      CHECK(b.x >= 0);
      CHECK(b.x + b.w <= 128);
    }
    CHECK(boxes.back().x + boxes.back().w == 128);
  }

  TEST_CASE("updates are deterministic") {
    const GrayFrame a = square_at(50, 40);
    const GrayFrame b = square_at(53, 41);
    const TrackerState s = kcf_init(a, box_around(50, 40));
    const KcfStep x = kcf_update(s, b);
    const KcfStep y = kcf_update(s, b);
    CHECK(x.box == y.box);
    CHECK(x.state.alpha_f == y.state.alpha_f);
  }

  TEST_CASE("invalid seeds, parameters and frames are rejected") {
    const GrayFrame f = square_at(50, 40);
    CHECK_THROWS_AS(kcf_init(f, RoiBox{200, 10, 10, 10}), std::invalid_argument);
    KcfParams bad;
    bad.lambda = 0.0;
    CHECK_THROWS_AS(kcf_init(f, box_around(50, 40), bad), std::invalid_argument);
    bad = KcfParams{};
    bad.learning_rate = 1.5;
    CHECK_THROWS_AS(kcf_init(f, box_around(50, 40), bad), std::invalid_argument);
    const TrackerState s = kcf_init(f, box_around(50, 40));
    CHECK_THROWS_AS(kcf_response(s, onsd::test::constant_frame(64, 48, 0)), std::invalid_argument);
  }

  TEST_CASE("coefficient grid matches the search window") {
    const TrackerState s = kcf_init(square_at(50, 40), box_around(50, 40));
    CHECK(s.alpha_f.rows() == s.window_h);
    CHECK(s.alpha_f.cols() == s.window_w);
    CHECK(s.cos_window.rows() == s.window_h);
    CHECK(s.window_w * s.params.cell_size >= 24 * 2.5 - s.params.cell_size);
  }
}
