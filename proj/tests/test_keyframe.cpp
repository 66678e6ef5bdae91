#include "doctest.h"
#include "helpers.hpp"
#include "onsd/keyframe.hpp"

#include <cmath>
#include <map>

using namespace onsd;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

ScalarSeries series(std::initializer_list<double> v) { return ScalarSeries{vec(v), SeriesOrigin::kRaw}; }

double histogram_entropy(const GrayFrame& f) {
  std::map<int, int> counts;
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) ++counts[f.at(y, x)];
  }
  const double n = static_cast<double>(f.width()) * f.height();
  double h = 0.0;
  for (const auto& [value, c] : counts) h -= c / n * std::log2(c / n);
  return h;
}

}  // namespace

TEST_SUITE("keyframe") {
  TEST_CASE("entropy hand values") {
    CHECK(entropy(vec({1.0})) == 0.0);
    CHECK(entropy(Eigen::VectorXd::Constant(8, 0.125)) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(entropy(vec({0.5, 0.25, 0.25, 0.0})) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK_THROWS_AS(entropy(vec({0.5, 0.6})), std::invalid_argument);
    CHECK_THROWS_AS(entropy(vec({1.5, -0.5})), std::invalid_argument);
  }

  TEST_CASE("frame entropy of constant and evenly split frames") {
    CHECK(frame_entropy(onsd::test::constant_frame(16, 8, 77)) == 0.0);
    const GrayFrame eight = onsd::test::frame_from(16, 8, [](int x, int) { return (x % 8) * 30; });
    CHECK(frame_entropy(eight) == doctest::Approx(3.0).epsilon(1e-12));
  }

  TEST_CASE("frame entropy is bounded and matches a histogram oracle") {
    std::mt19937_64 rng(55);
    std::uniform_int_distribution<int> levels(1, 256);
    for (int i = 0; i < 50; ++i) {
      const int k = levels(rng);
      std::uniform_int_distribution<int> u(0, k - 1);
      const GrayFrame f = onsd::test::frame_from(24, 16, [&](int, int) { return u(rng); });
      const double h = frame_entropy(f);
      CHECK(h >= 0.0);
      CHECK(h <= 8.0);
      CHECK(h == doctest::Approx(histogram_entropy(f)).epsilon(1e-12));
    }
  }

  TEST_CASE("entropy series has one value per frame") {
    std::vector<GrayFrame> frames{onsd::test::constant_frame(8, 4, 0),
                                  onsd::test::frame_from(8, 4, [](int x, int) { return x % 2 ? 255 : 0; })};
    const ScalarSeries s = entropy_series(VideoSequence(frames));
    CHECK(s.origin == SeriesOrigin::kEntropy);
    CHECK(s.values == vec({0.0, 1.0}));
  }

  TEST_CASE("smoothing and differencing") {
    const ScalarSeries s = series({1, 4, 9, 16, 25});
    const ScalarSeries sm = smooth(s, 3);
    CHECK(sm.origin == SeriesOrigin::kSmoothed);
    CHECK(sm.values(2) == doctest::Approx(29.0 / 3.0));
    const ScalarSeries d1 = difference(s, 1);
    CHECK(d1.origin == SeriesOrigin::kDiff1);
    CHECK(d1.values == vec({3, 5, 7, 9}));
    const ScalarSeries d2 = difference(s, 2);
    CHECK(d2.origin == SeriesOrigin::kDiff2);
    CHECK(d2.values == vec({2, 2, 2}));
    CHECK_THROWS_AS(difference(s, 3), std::invalid_argument);
  }

  TEST_CASE("keyframes are the tallest separated peaks") {
    const ScalarSeries s = series({0, 5, 0, 0, 9, 0, 0, 7, 8, 0, 0, 3, 0});
    const KeyframeSelection k = extract_keyframes(s, 3, 2);
    CHECK(k.indices == std::vector<int>{4, 8, 1});
    CHECK_FALSE(k.shortfall);
    const KeyframeSelection spaced = extract_keyframes(s, 2, 5);
    CHECK(spaced.indices == std::vector<int>{4, 11});
  }

  TEST_CASE("ties go to the lower index and plateaus count once") {
    const KeyframeSelection k = extract_keyframes(series({0, 4, 0, 4, 4, 4, 0}), 2, 1);
    CHECK(k.indices == std::vector<int>{1, 3});
  }

  TEST_CASE("too few peaks sets the shortfall flag") {
    const KeyframeSelection k = extract_keyframes(series({0, 1, 2, 3, 2, 1, 0}), 2, 1);
    CHECK(k.indices == std::vector<int>{3});
    CHECK(k.shortfall);
    const KeyframeSelection none = extract_keyframes(series({1, 2, 3, 4}), 1, 1);
    CHECK(none.indices.empty());
    CHECK(none.shortfall);
  }

  TEST_CASE("invalid keyframe requests are rejected") {
    CHECK_THROWS_AS(extract_keyframes(series({0, 1, 0}), 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(extract_keyframes(series({0, 1, 0}), 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(extract_keyframes(series({0, 1, 0}), 1, -1), std::invalid_argument);
  }
}
