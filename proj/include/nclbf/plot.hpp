#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "nclbf/barrier.hpp"
#include "nclbf/scenario.hpp"
#include "nclbf/simulator.hpp"

namespace nclbf {

namespace svg {

inline const char* palette(std::size_t k) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b",
                                 "#e377c2", "#17becf", "#bcbd22", "#7f7f7f", "#d62728"};
  return colors[k % (sizeof colors / sizeof colors[0])];
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Linear map from data interval onto pixel interval.
struct Axis {
  double lo, hi, px0, px1;
  double operator()(double v) const { return px0 + (v - lo) / (hi - lo) * (px1 - px0); }
};

/// Polyline points, dropping vertices closer than half a pixel to the last
/// kept one.
inline std::string polyline_points(const std::vector<std::pair<double, double>>& pts) {
  std::string out;
  double lx = 0, ly = 0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto [x, y] = pts[k];
    if (k > 0 && k + 1 < pts.size() && std::abs(x - lx) < 0.5 && std::abs(y - ly) < 0.5) continue;
    if (!out.empty()) out += ' ';
    out += num(x) + "," + num(y);
    lx = x;
    ly = y;
  }
  return out;
}

}  // namespace svg

/// Phase portrait: obstacles, boundary spheres (dashed), contact points,
/// trajectories.
inline std::string phase_plot_svg(const ScenarioConfig& cfg, const std::vector<TrajectoryRecord>& runs,
                                  double size = 640.0) {
  if (cfg.state_dim() != 2) throw DimensionError("phase plot requires n = 2");
  const LyapunovBarrier bar(cfg);
  const double m = 50.0;
  const auto& b = cfg.state_box.bounds;
  const svg::Axis ax{b[0].first, b[0].second, m, size - m};
  const svg::Axis ay{b[1].first, b[1].second, size - m, m};
  const double scale = (size - 2 * m) / (b[0].second - b[0].first);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg::num(size) << "\" height=\"" << svg::num(size)
     << "\" viewBox=\"0 0 " << svg::num(size) << ' ' << svg::num(size) << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << svg::num(size) << "\" height=\"" << svg::num(size) << "\" fill=\"white\"/>\n";
  os << "<rect x=\"" << svg::num(m) << "\" y=\"" << svg::num(m) << "\" width=\"" << svg::num(size - 2 * m)
     << "\" height=\"" << svg::num(size - 2 * m) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double v : {b[0].first, 0.0, b[0].second}) {
    os << "<text x=\"" << svg::num(ax(v)) << "\" y=\"" << svg::num(size - m + 18)
       << "\" font-size=\"12\" text-anchor=\"middle\">" << svg::label(v) << "</text>\n";
  }
  for (double v : {b[1].first, 0.0, b[1].second}) {
    os << "<text x=\"" << svg::num(m - 6) << "\" y=\"" << svg::num(ay(v) + 4)
       << "\" font-size=\"12\" text-anchor=\"end\">" << svg::label(v) << "</text>\n";
  }
  os << "<text x=\"" << svg::num(size / 2) << "\" y=\"" << svg::num(size - 12)
     << "\" font-size=\"13\" text-anchor=\"middle\">x1</text>\n";
  os << "<text x=\"14\" y=\"" << svg::num(size / 2) << "\" font-size=\"13\" text-anchor=\"middle\">x2</text>\n";

  for (std::size_t i = 0; i < bar.size(); ++i) {
    const auto& o = bar.obstacle(i);
    os << "<circle cx=\"" << svg::num(ax(o.center(0))) << "\" cy=\"" << svg::num(ay(o.center(1))) << "\" r=\""
       << svg::num(std::sqrt(o.radius_sq) * scale) << "\" fill=\"#f4a6a6\" stroke=\"#c0392b\"/>\n";
    const auto s = bar.boundary_sphere(i);
    if (s.radius_sq > 0.0) {
      os << "<circle cx=\"" << svg::num(ax(s.center(0))) << "\" cy=\"" << svg::num(ay(s.center(1))) << "\" r=\""
         << svg::num(std::sqrt(s.radius_sq) * scale)
         << "\" fill=\"none\" stroke=\"#555\" stroke-dasharray=\"6,4\"/>\n";
    }
    try {
      for (const auto& p : bar.contact_points_2d(i)) {
        os << "<rect x=\"" << svg::num(ax(p(0)) - 4) << "\" y=\"" << svg::num(ay(p(1)) - 4)
           << "\" width=\"8\" height=\"8\" fill=\"black\"/>\n";
      }
    } catch (const GeometryError&) {
    }
  }

  for (std::size_t k = 0; k < runs.size(); ++k) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& smp : runs[k].samples) pts.emplace_back(ax(smp.x(0)), ay(smp.x(1)));
    if (pts.empty()) continue;
    os << "<polyline fill=\"none\" stroke=\"" << svg::palette(k) << "\" stroke-width=\"1.5\" points=\""
       << svg::polyline_points(pts) << "\"/>\n";
    os << "<circle cx=\"" << svg::num(pts.front().first) << "\" cy=\"" << svg::num(pts.front().second)
       << "\" r=\"3.5\" fill=\"" << svg::palette(k) << "\"/>\n";
  }
  os << "<circle cx=\"" << svg::num(ax(0.0)) << "\" cy=\"" << svg::num(ay(0.0)) << "\" r=\"3\" fill=\"black\"/>\n";
  os << "</svg>\n";
  return os.str();
}

/// V against time for every run; logarithmic axis when all values are
/// positive.
inline std::string value_plot_svg(const std::vector<TrajectoryRecord>& runs, double width = 720.0,
                                  double height = 420.0) {
  double t_max = 0.0, v_min = std::numeric_limits<double>::infinity(), v_max = -v_min;
  for (const auto& r : runs) {
    for (const auto& s : r.samples) {
      t_max = std::max(t_max, s.t);
      v_min = std::min(v_min, s.V);
      v_max = std::max(v_max, s.V);
    }
  }
  const bool empty = !(v_max >= v_min);
  const bool logy = !empty && v_min > 0.0;
  auto tr = [logy](double v) { return logy ? std::log10(v) : v; };
  double lo = empty ? 0.0 : tr(v_min), hi = empty ? 1.0 : tr(v_max);
  if (logy) {
    lo = std::floor(lo);
    hi = std::ceil(hi);
  }
  if (!(hi > lo)) hi = lo + 1.0;
  if (!(t_max > 0.0)) t_max = 1.0;
  const double m = 55.0;
  const svg::Axis at{0.0, t_max, m, width - 20};
  const svg::Axis av{lo, hi, height - m, 20};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg::num(width) << "\" height=\"" << svg::num(height)
     << "\" viewBox=\"0 0 " << svg::num(width) << ' ' << svg::num(height) << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << svg::num(width) << "\" height=\"" << svg::num(height)
     << "\" fill=\"white\"/>\n";
  os << "<rect x=\"" << svg::num(m) << "\" y=\"20\" width=\"" << svg::num(width - 20 - m) << "\" height=\""
     << svg::num(height - m - 20) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double v : {0.0, t_max}) {
    os << "<text x=\"" << svg::num(at(v)) << "\" y=\"" << svg::num(height - m + 18)
       << "\" font-size=\"12\" text-anchor=\"middle\">" << svg::label(v) << "</text>\n";
  }
  for (double v : {lo, hi}) {
    os << "<text x=\"" << svg::num(m - 6) << "\" y=\"" << svg::num(av(v) + 4)
       << "\" font-size=\"12\" text-anchor=\"end\">" << (logy ? "1e" + svg::label(v) : svg::label(v)) << "</text>\n";
  }
  os << "<text x=\"" << svg::num((width + m) / 2) << "\" y=\"" << svg::num(height - 12)
     << "\" font-size=\"13\" text-anchor=\"middle\">t</text>\n";
  os << "<text x=\"14\" y=\"" << svg::num(height / 2) << "\" font-size=\"13\" text-anchor=\"middle\">V</text>\n";
  for (std::size_t k = 0; k < runs.size(); ++k) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : runs[k].samples) {
      if (logy && !(s.V > 0.0)) continue;
      pts.emplace_back(at(s.t), av(tr(s.V)));
    }
    if (pts.empty()) continue;
    os << "<polyline fill=\"none\" stroke=\"" << svg::palette(k) << "\" stroke-width=\"1.5\" points=\""
       << svg::polyline_points(pts) << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace nclbf
