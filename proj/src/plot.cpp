#include "onsd/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace onsd {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;
constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c",
                                                "#ff7f0e", "#9467bd", "#8c564b"};

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Degenerate or empty ranges are widened so the mapping stays finite.
  void settle() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  Range xr;
  Range yr;
  for (const auto& s : spec.series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("plot: x and y lengths differ");
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      xr.add(s.x(i));
      yr.add(s.y(i));
    }
  }
  for (const auto& r : spec.rules) yr.add(r.y);
  for (double m : spec.markers_x) xr.add(m);
  xr.settle();
  yr.settle();
  const double pad = 0.05 * (yr.hi - yr.lo);
  yr.lo -= pad;
  yr.hi += pad;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  const auto py = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(spec.title)
    << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int t = 0; t <= 4; ++t) {
    const double xv = xr.lo + (xr.hi - xr.lo) * t / 4.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * t / 4.0;
    o << "<text x=\"" << fixed(px(xv)) << "\" y=\"" << fixed(kTop + ph + 16) << "\" text-anchor=\"middle\">"
      << fixed(xv, 3) << "</text>\n";
    o << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(py(yv) + 4) << "\" text-anchor=\"end\">"
      << fixed(yv, 3) << "</text>\n";
  }
  o << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\"" << fixed(kHeight - 10)
    << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << fixed(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << fixed(kTop + ph / 2) << ")\">" << escape(spec.y_label) << "</text>\n";

  for (double m : spec.markers_x) {
    o << "<line x1=\"" << fixed(px(m)) << "\" y1=\"" << kTop << "\" x2=\"" << fixed(px(m)) << "\" y2=\""
      << kTop + ph << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (const auto& r : spec.rules) {
    o << "<line x1=\"" << kLeft << "\" y1=\"" << fixed(py(r.y)) << "\" x2=\"" << kLeft + pw << "\" y2=\""
      << fixed(py(r.y)) << "\" stroke=\"#555\" stroke-dasharray=\"6 3\"/>\n";
    o << "<text x=\"" << fixed(kLeft + pw - 4) << "\" y=\"" << fixed(py(r.y) - 4) << "\" text-anchor=\"end\">"
      << escape(r.name) << "</text>\n";
  }

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const char* color = kColors[k % kColors.size()];
    if (s.points) {
      for (Eigen::Index i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x(i)) || !std::isfinite(s.y(i))) continue;
        o << "<circle cx=\"" << fixed(px(s.x(i))) << "\" cy=\"" << fixed(py(s.y(i))) << "\" r=\"3\" fill=\""
          << color << "\"/>\n";
      }
    } else if (s.x.size() > 0) {
      o << "<path fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" d=\"";
      bool pen_down = false;
      for (Eigen::Index i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x(i)) || !std::isfinite(s.y(i))) {
          pen_down = false;
          continue;
        }
        o << (pen_down ? " L" : " M") << fixed(px(s.x(i))) << ',' << fixed(py(s.y(i)));
        pen_down = true;
      }
      o << "\"/>\n";
    }
    o << "<text x=\"" << fixed(kLeft + 8) << "\" y=\"" << fixed(kTop + 16 + 14.0 * static_cast<double>(k))
      << "\" fill=\"" << color << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace onsd
