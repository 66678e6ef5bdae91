// Acceptance checks: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "helpers.hpp"
#include "onsd/evaluation.hpp"
#include "onsd/keyframe.hpp"
#include "onsd/localization.hpp"
#include "onsd/phantom.hpp"
#include "onsd/pipeline.hpp"
#include "onsd/refinement.hpp"
#include "onsd/superpixel.hpp"
#include "onsd/tracking.hpp"

using namespace onsd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

// 50 speckled, drifting phantoms measured end to end.
Outcome accuracy() {
  std::mt19937_64 rng(7);
  double err_sum = 0.0;
  double worst_err = 0.0;
  double worst_secs = 0.0;
  int failures = 0;
  std::string first_failure;
  const int total = 50;
  for (int t = 0; t < total; ++t) {
    const int w = std::uniform_int_distribution<int>(30, 80)(rng);
    PhantomSpec s = onsd::test::accuracy_phantom(w);
    s.speckle_sigma = std::uniform_real_distribution<double>(5.0, 25.0)(rng);
    const int n = std::uniform_int_distribution<int>(50, 100)(rng);
    s.drift = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * onsd::test::accuracy_phantom_max_drift(s, n);
    s.clean_frame_index = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const Phantom p = generate_phantom(s, n, 1000 + static_cast<std::uint64_t>(t));
    PipelineConfig config;
    config.seed_box = p.truth.frames[0].roi;
    const auto start = std::chrono::steady_clock::now();
    try {
      const MeasurementReport r = measure_video(p.video, "phantom" + std::to_string(t), config);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      worst_secs = std::max(worst_secs, secs * 100.0 / n);
      const double err = std::abs(r.measurement.width_px - w) / w;
      err_sum += err;
      worst_err = std::max(worst_err, err);
    } catch (const std::exception& e) {
      ++failures;
      err_sum += 1.0;
      if (first_failure.empty()) first_failure = e.what();
    }
  }
  const double mean_err = err_sum / total * 100.0;
  std::ostringstream d;
  d << "mean abs error " << mean_err << "% (worst " << worst_err * 100.0 << "%), " << failures
    << " failed, slowest " << worst_secs << " s per 100 frames";
  if (!first_failure.empty()) d << "; first failure: " << first_failure;
  return {mean_err <= 2.0 && failures == 0 && worst_secs <= 10.0, d.str()};
}

// 20 videos each holding one speckle-free frame; selection must find it.
Outcome clean_frame_selection() {
  std::mt19937_64 rng(1);
  int hits = 0;
  for (int t = 0; t < 20; ++t) {
    const int w = std::uniform_int_distribution<int>(30, 36)(rng);
    PhantomSpec s = onsd::test::selection_phantom(w);
    const int n = std::uniform_int_distribution<int>(50, 100)(rng);
    s.speckle_sigma = std::uniform_real_distribution<double>(5.0, 25.0)(rng);
    s.drift = onsd::test::selection_phantom_max_drift(s, n) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    s.clean_frame_index = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const Phantom p = generate_phantom(s, n, 500 + static_cast<std::uint64_t>(t));
    const auto boxes = track_sequence(p.video, p.truth.frames[0].roi);
    const FrameSelection sel = select_optimal_frame(p.video, boxes, PipelineConfig::default_scoring());
    hits += sel.optimal_index == s.clean_frame_index;
  }
  return {hits >= 18, std::to_string(hits) + "/20 clean frames selected"};
}

Outcome dice_oracle() {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.5);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    BinaryMask a(16, 16);
    BinaryMask b(16, 16);
    int na = 0;
    int nb = 0;
    int both = 0;
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        const bool pa = coin(rng);
        const bool pb = coin(rng);
        a.set(y, x, pa);
        b.set(y, x, pb);
        na += pa;
        nb += pb;
        both += pa && pb;
      }
    }
    const double expected = 2.0 * both / (na + nb);
    const double got = dice_score(a, b);
    bad += !near(got, expected, 1e-12) || !near(dice_score(b, a), got, 0.0) || dice_score(a, a) != 1.0;
  }
  return {bad == 0, std::to_string(1000 - bad) + "/1000 mask pairs match the oracle"};
}

Outcome kl_properties() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.001, 1.0);
  int bad = 0;
  for (int t = 0; t < 500; ++t) {
    Eigen::VectorXd p(32);
    Eigen::VectorXd q(32);
    for (auto& x : p) x = u(rng);
    for (auto& x : q) x = u(rng);
    p /= p.sum();
    q /= q.sum();
    double expected = 0.0;
    for (int i = 0; i < 32; ++i) expected += p(i) * std::log(p(i) / q(i));
    const double d = kl_divergence(p, q);
    const bool distinct = (p - q).cwiseAbs().maxCoeff() > 1e-12;
    bad += d < 0.0 || (distinct && !(d > 0.0)) || !near(d, expected, 1e-12) || !near(kl_divergence(p, p), 0.0, 1e-12);
  }
  const double ln2 = kl_divergence(vec({1.0, 0.0}), vec({0.5, 0.5}));
  const double known = kl_divergence(vec({0.5, 0.5}), vec({0.75, 0.25}));
  const bool closed = near(ln2, std::log(2.0), 1e-12) && near(known, 0.1438, 5e-5);
  std::ostringstream d;
  d << (500 - bad) << "/500 pairs non-negative, zero exactly on self and matching the sum; D = " << ln2 << ", " << known;
  return {bad == 0 && closed, d.str()};
}

Outcome gmm_properties() {
  std::mt19937_64 rng(5);
  int bad = 0;
  for (int t = 0; t < 100; ++t) {
    std::normal_distribution<double> a(std::uniform_real_distribution<double>(20, 100)(rng), 8.0);
    std::normal_distribution<double> b(std::uniform_real_distribution<double>(120, 230)(rng), 8.0);
    Eigen::VectorXd d(600);
    for (int i = 0; i < 600; ++i) d(i) = i % 3 ? a(rng) : b(rng);
    const GmmModel m = gmm_fit(d, 2, 100, 1e-10);
    for (std::size_t i = 1; i < m.log_likelihood_trace.size(); ++i) {
      bad += m.log_likelihood_trace[i] < m.log_likelihood_trace[i - 1] - 1e-9;
    }
  }
  Eigen::VectorXd deltas(1000);
  deltas.head(500).setZero();
  deltas.tail(500).setConstant(255.0);
  const GmmModel two = gmm_fit(deltas, 2, 100, 1e-9);
  const bool recovered = near(two.means.minCoeff(), 0.0, 1e-6) && near(two.means.maxCoeff(), 255.0, 1e-6);
  std::ostringstream d;
  d << bad << " log-likelihood decreases over 100 fits; two-delta means {" << two.means.minCoeff() << ", "
    << two.means.maxCoeff() << "}";
  return {bad == 0 && recovered, d.str()};
}

// Strictly decreasing then strictly increasing signals: the only trough is
// the designed minimum, so any start must walk to it.
Outcome center_walk_oracle() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> step(0.1, 5.0);
  int bad = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = std::uniform_int_distribution<int>(5, 300)(rng);
    const int m = std::uniform_int_distribution<int>(1, n - 2)(rng);
    Eigen::VectorXd v(n);
    v(m) = std::uniform_real_distribution<double>(-50.0, 50.0)(rng);
    for (int i = m - 1; i >= 0; --i) v(i) = v(i + 1) + step(rng);
    for (int i = m + 1; i < n; ++i) v(i) = v(i - 1) + step(rng);
    const int start = std::uniform_int_distribution<int>(1, n - 2)(rng);
    bad += locate_center(v, start) != m;
  }
  return {bad == 0, std::to_string(200 - bad) + "/200 signals walk to their trough"};
}

GrayFrame square_frame(double cx, double cy) {
  return onsd::test::frame_from(256, 192, [&](int x, int y) {
    return std::abs(x + 0.5 - cx) <= 12 && std::abs(y + 0.5 - cy) <= 12 ? 220 : 20;
  });
}

// Worst per-frame center error over a 30-frame path centered on the frame,
// so the square stays fully visible at any speed up to 5 px/frame.
double track_error(double vx, double vy) {
  const double cx = 128.0 - 14.5 * vx;
  const double cy = 96.0 - 14.5 * vy;
  std::vector<GrayFrame> frames;
  for (int i = 0; i < 30; ++i) frames.push_back(square_frame(cx + vx * i, cy + vy * i));
  const RoiBox seed{static_cast<int>(std::lround(cx)) - 12, static_cast<int>(std::lround(cy)) - 12, 24, 24};
  const auto boxes = track_sequence(VideoSequence(frames), seed);
  double worst = 0.0;
  for (int i = 0; i < 30; ++i) {
    const auto& b = boxes[static_cast<std::size_t>(i)];
    worst = std::max(worst, std::hypot(b.center_x() - (cx + vx * i), b.center_y() - (cy + vy * i)));
  }
  return worst;
}

Outcome tracking() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> speed(0.0, 5.0);
  double worst = 0.0;
  int paths = 0;
  for (int t = 0; t < 40; ++t) {
    // Eight compass directions at full speed, then random velocities.
    const double a = t < 8 ? t * std::numbers::pi / 4.0 : angle(rng);
    const double s = t < 8 ? 5.0 : speed(rng);
    worst = std::max(worst, track_error(s * std::cos(a), s * std::sin(a)));
    ++paths;
  }
  std::vector<GrayFrame> still(30, square_frame(128, 96));
  const RoiBox still_seed{116, 84, 24, 24};
  int drift = 0;
  for (const auto& b : track_sequence(VideoSequence(still), still_seed)) drift = std::max({drift, std::abs(b.x - 116), std::abs(b.y - 84)});
  std::ostringstream d;
  d << paths << " square paths up to 5 px/frame tracked within " << worst << " px; static drift " << drift
    << " px";
  return {worst <= 2.0 && drift == 0, d.str()};
}

Outcome entropy_bounds() {
  std::mt19937_64 rng(9);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const int levels = std::uniform_int_distribution<int>(1, 256)(rng);
    std::uniform_int_distribution<int> u(0, levels - 1);
    const GrayFrame f = onsd::test::frame_from(32, 16, [&](int, int) { return u(rng); });
    const double h = frame_entropy(f);
    bad += !(h >= 0.0 && h <= 8.0);
  }
  const double zero = entropy(vec({1.0}));
  const double three = entropy(Eigen::VectorXd::Constant(8, 0.125));
  const double one_half = entropy(vec({0.5, 0.25, 0.25}));
  std::ostringstream d;
  d << (1000 - bad) << "/1000 frames within [0, 8] bits; hand values " << zero << ", " << three << ", " << one_half;
  return {bad == 0 && zero == 0.0 && near(three, 3.0, 1e-12) && near(one_half, 1.5, 1e-12), d.str()};
}

// Reference values computed separately with numpy and scipy.
Outcome statistics() {
  const Eigen::VectorXd a = vec({4.1, 5.3, 3.8, 6.0, 4.7, 5.5});
  const Eigen::VectorXd b = vec({4.3, 5.0, 4.0, 5.6, 4.9, 5.8});
  const AgreementReport r = agreement(a, b);
  const double tol = 1e-6;
  const bool fixture = near(r.icc.icc, 0.936358605423354, tol) && near(r.icc.ci_low, 0.6171817905279896, tol) &&
                       near(r.icc.ci_high, 0.9908569310385161, tol) &&
                       near(r.bland_altman.bias, -0.03333333333333336, tol) &&
                       near(r.bland_altman.loa_low, -0.623507093057253, tol) &&
                       near(r.bland_altman.loa_high, 0.5568404263905864, tol) && r.cohens_d &&
                       near(*r.cohens_d, -0.042702300947370986, tol) &&
                       near(r.mean_error, 5.3413443966199186, tol) && near(r.mse, 0.11303883305208784, tol);
  const AgreementReport self = agreement(a, a);
  const bool identity = self.mean_error == 0.0 && self.mse == 0.0 && self.icc.icc == 1.0 &&
                        self.bland_altman.bias == 0.0 && self.cohens_d && *self.cohens_d == 0.0;
  std::ostringstream d;
  d << "fixture " << (fixture ? "matches" : "differs") << " (ICC " << r.icc.icc << " [" << r.icc.ci_low << ", "
    << r.icc.ci_high << "]); self-comparison " << (identity ? "is perfect" : "is not perfect");
  return {fixture && identity, d.str()};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + ONSD_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Runs every command twice into fresh directories and compares all bytes.
Outcome reproducibility() {
  onsd::test::TempDir dir("acceptance_repeat");
  const auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
  onsd::test::spit(dir / "a.csv", "id,value\np1,4.1\np2,5.3\np3,3.8\np4,6.0\np5,4.7\np6,5.5\n");
  onsd::test::spit(dir / "b.csv", "id,value\np1,4.3\np2,5.0\np3,4.0\np4,5.6\np5,4.9\np6,5.8\n");
  for (const char* run : {"1", "2"}) {
    const fs::path out = dir / run;
    if (run_cli("phantom " + q(out / "phantom") + " --frames 40 --seed 12") != 0 ||
        run_cli("--dump-signals measure " + q(out / "phantom") + " -o " + q(out / "measure")) != 0 ||
        run_cli("evaluate " + q(dir / "a.csv") + " " + q(dir / "b.csv") + " -o " + q(out / "evaluate")) != 0) {
      return {false, std::string("a command failed on run ") + run};
    }
  }
  int files = 0;
  int differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "1")) {
    if (!e.is_regular_file()) continue;
    ++files;
    differ += onsd::test::slurp(e.path()) != onsd::test::slurp(dir / "2" / fs::relative(e.path(), dir / "1"));
  }
  return {files > 0 && differ == 0, std::to_string(files - differ) + "/" + std::to_string(files) +
                                        " phantom, measure and evaluate outputs identical on re-run"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"phantom accuracy", accuracy},
      {"clean frame selection", clean_frame_selection},
      {"Dice oracle", dice_oracle},
      {"KL divergence", kl_properties},
      {"GMM fitting", gmm_properties},
      {"center walk", center_walk_oracle},
      {"KCF tracking", tracking},
      {"frame entropy", entropy_bounds},
      {"agreement statistics", statistics},
      {"reproducible reports", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
