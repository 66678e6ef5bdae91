#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace onsd {

struct PlotSeries {
  std::string name;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  bool points = false;  // scatter markers instead of a polyline
};

/// A horizontal reference line drawn across the full x range.
struct PlotRule {
  std::string name;
  double y = 0.0;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  std::vector<PlotRule> rules;
  std::vector<double> markers_x;  // vertical markers, e.g. selected frames
};

/// Standalone SVG document. Coordinates are printed with fixed precision, so
/// identical input yields identical bytes.
std::string render_svg(const PlotSpec& spec);

}  // namespace onsd
