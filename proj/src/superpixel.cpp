#include "onsd/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "onsd/errors.hpp"
#include "onsd/parallel.hpp"

namespace onsd {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Center {
  double x = 0.0;
  double y = 0.0;
  double intensity = 0.0;
};

struct Components {
  LabelMatrix id;            // component id per pixel
  std::vector<int> label;    // label of each component
  std::vector<long> size;
};

Components connected_components(const LabelMatrix& labels) {
  const int h = static_cast<int>(labels.rows());
  const int w = static_cast<int>(labels.cols());
  Components cc{LabelMatrix::Constant(h, w, -1), {}, {}};
  std::vector<std::pair<int, int>> stack;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (cc.id(y0, x0) >= 0) continue;
      const int comp = static_cast<int>(cc.label.size());
      const int lab = labels(y0, x0);
      long count = 0;
      stack.assign(1, {y0, x0});
      cc.id(y0, x0) = comp;
      while (!stack.empty()) {
        const auto [y, x] = stack.back();
        stack.pop_back();
        ++count;
        constexpr int dy[] = {-1, 1, 0, 0};
        constexpr int dx[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int ny = y + dy[k];
          const int nx = x + dx[k];
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          if (cc.id(ny, nx) >= 0 || labels(ny, nx) != lab) continue;
          cc.id(ny, nx) = comp;
          stack.emplace_back(ny, nx);
        }
      }
      cc.label.push_back(lab);
      cc.size.push_back(count);
    }
  }
  return cc;
}

// Merges every fragment that is not its label's largest component into the
// largest adjacent main component, until each label is one component.
void enforce_connectivity(LabelMatrix& labels) {
  const int h = static_cast<int>(labels.rows());
  const int w = static_cast<int>(labels.cols());
  for (;;) {
    const Components cc = connected_components(labels);
    const int n = static_cast<int>(cc.label.size());
    const int max_label = *std::max_element(cc.label.begin(), cc.label.end());
    std::vector<int> main_of(static_cast<std::size_t>(max_label) + 1, -1);
    for (int c = 0; c < n; ++c) {
      int& m = main_of[static_cast<std::size_t>(cc.label[static_cast<std::size_t>(c)])];
      if (m < 0 || cc.size[static_cast<std::size_t>(c)] > cc.size[static_cast<std::size_t>(m)]) m = c;
    }
    auto is_main = [&](int c) {
      return main_of[static_cast<std::size_t>(cc.label[static_cast<std::size_t>(c)])] == c;
    };

    // Best adjacent main component for every orphan.
    std::vector<int> target(static_cast<std::size_t>(n), -1);
    bool any_orphan = false;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int c = cc.id(y, x);
        if (is_main(c)) continue;
        any_orphan = true;
        const int ny[] = {y - 1, y + 1, y, y};
        const int nx[] = {x, x, x - 1, x + 1};
        for (int k = 0; k < 4; ++k) {
          if (ny[k] < 0 || ny[k] >= h || nx[k] < 0 || nx[k] >= w) continue;
          const int d = cc.id(ny[k], nx[k]);
          if (d == c || !is_main(d)) continue;
          int& t = target[static_cast<std::size_t>(c)];
          const long sd = cc.size[static_cast<std::size_t>(d)];
          if (t < 0 || sd > cc.size[static_cast<std::size_t>(t)] || (sd == cc.size[static_cast<std::size_t>(t)] && d < t)) t = d;
        }
      }
    }
    if (!any_orphan) break;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int t = target[static_cast<std::size_t>(cc.id(y, x))];
        if (t >= 0) labels(y, x) = cc.label[static_cast<std::size_t>(t)];
      }
    }
  }
}

int compact_labels(LabelMatrix& labels) {
  std::vector<int> remap;
  int next = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    int& l = labels.data()[i];
    if (static_cast<std::size_t>(l) >= remap.size()) remap.resize(static_cast<std::size_t>(l) + 1, -1);
    int& r = remap[static_cast<std::size_t>(l)];
    if (r < 0) r = next++;
    l = r;
  }
  return next;
}

}  // namespace

SuperpixelLabeling slic_segment(const GrayFrame& frame, const SlicParams& params) {
  const int w = frame.width();
  const int h = frame.height();
  const long area = static_cast<long>(w) * h;
  if (params.target_clusters < 1 || params.target_clusters > area) {
    throw std::invalid_argument("target_clusters must be in [1, pixel count]");
  }
  if (!(params.compactness > 0.0)) throw std::invalid_argument("compactness must be positive");
  if (params.max_iters < 1) throw std::invalid_argument("max_iters must be positive");

  const double step = std::sqrt(static_cast<double>(area) / params.target_clusters);
  int nx = std::clamp(static_cast<int>(std::lround(w / step)), 1, w);
  int ny = std::clamp(static_cast<int>(std::lround(h / step)), 1, h);
  while (nx * ny > params.target_clusters) (nx >= ny ? nx : ny) -= 1;

  const RowMajorMatrix img = frame.pixels().cast<double>();
  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      Center c;
      c.x = (i + 0.5) * w / nx - 0.5;
      c.y = (j + 0.5) * h / ny - 0.5;
      c.intensity = img(static_cast<int>(std::lround(c.y)), static_cast<int>(std::lround(c.x)));
      centers.push_back(c);
    }
  }

  LabelMatrix labels(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      labels(y, x) = std::min(y * ny / h, ny - 1) * nx + std::min(x * nx / w, nx - 1);
    }
  }

  const double spatial = (params.compactness / step) * (params.compactness / step);
  RowMajorMatrix dist(h, w);
  const int k_count = static_cast<int>(centers.size());
  for (int iter = 0; iter < params.max_iters; ++iter) {
    dist.setConstant(std::numeric_limits<double>::infinity());
    for (int k = 0; k < k_count; ++k) {
      const Center& c = centers[static_cast<std::size_t>(k)];
      const int x0 = std::max(0, static_cast<int>(std::floor(c.x - step)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(c.x + step)));
      const int y0 = std::max(0, static_cast<int>(std::floor(c.y - step)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(c.y + step)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double di = img(y, x) - c.intensity;
          const double dx = x - c.x;
          const double dy = y - c.y;
          const double d = di * di + spatial * (dx * dx + dy * dy);
          if (d < dist(y, x)) {
            dist(y, x) = d;
            labels(y, x) = k;
          }
        }
      }
    }

    std::vector<Center> sums(static_cast<std::size_t>(k_count));
    std::vector<long> counts(static_cast<std::size_t>(k_count), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto k = static_cast<std::size_t>(labels(y, x));
        sums[k].x += x;
        sums[k].y += y;
        sums[k].intensity += img(y, x);
        ++counts[k];
      }
    }
    double max_move = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double n = static_cast<double>(counts[k]);
      const Center next{sums[k].x / n, sums[k].y / n, sums[k].intensity / n};
      max_move = std::max(max_move, std::hypot(next.x - centers[k].x, next.y - centers[k].y));
      centers[k] = next;
    }
    if (max_move < params.convergence_px) break;
  }

  enforce_connectivity(labels);
  SuperpixelLabeling out;
  out.cluster_count = compact_labels(labels);
  out.labels = std::move(labels);
  return out;
}

SuperpixelLabeling realign_labels(const GrayFrame& frame, SuperpixelLabeling labeling) {
  if (labeling.labels.rows() != frame.height() || labeling.labels.cols() != frame.width()) {
    throw std::invalid_argument("labeling does not cover the frame");
  }
  labeling.cluster_intensity.assign(static_cast<std::size_t>(labeling.cluster_count), 0);
  const auto& px = frame.pixels();
  for (Eigen::Index i = 0; i < px.size(); ++i) {
    labeling.cluster_intensity[static_cast<std::size_t>(labeling.labels.data()[i])] += px.data()[i];
  }
  return labeling;
}

BinaryMask binarize_top_k(const SuperpixelLabeling& labeling, int k) {
  const int n = labeling.cluster_count;
  if (k < 1 || k > n) throw std::invalid_argument("k must be in [1, cluster_count]");
  if (static_cast<int>(labeling.cluster_intensity.size()) != n) {
    throw std::invalid_argument("labeling has not been realigned");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const auto& intensity = labeling.cluster_intensity;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return intensity[static_cast<std::size_t>(a)] > intensity[static_cast<std::size_t>(b)];
  });
  std::vector<bool> selected(static_cast<std::size_t>(n), false);
  for (int i = 0; i < k; ++i) selected[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  PixelMatrix bits(labeling.labels.rows(), labeling.labels.cols());
  for (Eigen::Index i = 0; i < bits.size(); ++i) {
    bits.data()[i] = selected[static_cast<std::size_t>(labeling.labels.data()[i])] ? BinaryMask::kOn : 0;
  }
  return BinaryMask(std::move(bits));
}

double dice_score(const BinaryMask& y, const BinaryMask& y_hat) {
  if (y.width() != y_hat.width() || y.height() != y_hat.height()) {
    throw std::invalid_argument("dice: mask sizes differ");
  }
  const auto a = (y.bits().array() == BinaryMask::kOn);
  const auto b = (y_hat.bits().array() == BinaryMask::kOn);
  const long total = a.count() + b.count();
  if (total == 0) throw std::invalid_argument("dice: both masks are empty");
  return 2.0 * static_cast<double>((a && b).count()) / static_cast<double>(total);
}

double score_frame(const GrayFrame& roi_crop, const ScoringParams& params) {
  SlicParams slic = params.slic;
  slic.target_clusters = static_cast<int>(
      std::min<long>(slic.target_clusters, static_cast<long>(roi_crop.width()) * roi_crop.height()));
  const SuperpixelLabeling labeling = realign_labels(roi_crop, slic_segment(roi_crop, slic));
  const int k = std::min(params.top_k, labeling.cluster_count);
  return dice_score(make_template(roi_crop.width(), roi_crop.height()),
                    binarize_top_k(labeling, k));
}

FrameSelection select_optimal_frame(const VideoSequence& seq, std::span<const RoiBox> rois,
                                     const ScoringParams& params, int jobs) {
  if (static_cast<int>(rois.size()) != seq.size()) {
    throw PipelineError("frame-selection", "need exactly one ROI per frame");
  }
  FrameSelection out;
  out.scores.resize(static_cast<std::size_t>(seq.size()));
  parallel_for(seq.size(), jobs, [&](int i) {
    const RoiBox& roi = rois[static_cast<std::size_t>(i)];
    if (roi.area() <= 0 || !roi.intersects(seq.width(), seq.height())) {
      throw PipelineError("frame-selection", "degenerate ROI", i);
    }
    double dice = 0.0;
    try {
      dice = score_frame(crop(seq[i], roi), params);
    } catch (const std::invalid_argument& e) {
      throw PipelineError("frame-selection", e.what(), i);
    }
    out.scores[static_cast<std::size_t>(i)] = FrameScore{i, dice};
  });
  for (const FrameScore& s : out.scores) {
    if (s.dice > out.scores[static_cast<std::size_t>(out.optimal_index)].dice) out.optimal_index = s.frame_index;
  }
  return out;
}

}  // namespace onsd
