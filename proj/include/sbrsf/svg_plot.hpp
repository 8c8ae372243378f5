#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbrsf/evaluation.hpp"

namespace sbrsf {

struct AucSeries {
  std::string label;
  std::string color;
  const AucCurve* curve = nullptr;
};

// Self-contained SVG of AUC(t) series: dots plus connecting lines, y fixed to
// [0, 1], undefined grid points skipped.
inline void write_auc_plot_svg(const std::string& path, const std::vector<AucSeries>& series,
                               const std::string& title) {
  if (series.empty()) throw std::invalid_argument("write_auc_plot_svg: no series");
  const double width = 640, height = 480;
  const double ml = 60, mr = 20, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double x_min = 1e300, x_max = -1e300;
  for (const auto& s : series)
    for (double t : s.curve->grid) {
      x_min = std::min(x_min, t);
      x_max = std::max(x_max, t);
    }
  if (!(x_max > x_min)) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  const auto px = [&](double t) { return ml + (t - x_min) / (x_max - x_min) * pw; };
  const auto py = [&](double v) { return mt + (1.0 - v) * ph; };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write plot: " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' viewBox='0 0 " << width << " " << height << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << width / 2 << "' y='24' text-anchor='middle' font-size='16' "
      << "font-family='sans-serif'>" << title << "</text>\n";

  // axes and ticks
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << mt + ph
      << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << mt + ph << "' x2='" << ml + pw << "' y2='" << mt + ph
      << "' stroke='black'/>\n";
  for (int k = 0; k <= 10; k += 2) {
    const double v = k / 10.0;
    out << "<line x1='" << ml - 4 << "' y1='" << py(v) << "' x2='" << ml << "' y2='" << py(v)
        << "' stroke='black'/>\n";
    out << "<text x='" << ml - 8 << "' y='" << py(v) + 4
        << "' text-anchor='end' font-size='11' font-family='sans-serif'>" << v << "</text>\n";
    out << "<line x1='" << ml << "' y1='" << py(v) << "' x2='" << ml + pw << "' y2='" << py(v)
        << "' stroke='#dddddd' stroke-dasharray='3,3'/>\n";
  }
  const int x_ticks = std::min<int>(10, std::max<int>(2, int(x_max - x_min)));
  for (int k = 0; k <= x_ticks; ++k) {
    const double t = x_min + (x_max - x_min) * k / x_ticks;
    out << "<line x1='" << px(t) << "' y1='" << mt + ph << "' x2='" << px(t) << "' y2='"
        << mt + ph + 4 << "' stroke='black'/>\n";
    out << "<text x='" << px(t) << "' y='" << mt + ph + 18
        << "' text-anchor='middle' font-size='11' font-family='sans-serif'>" << t << "</text>\n";
  }
  out << "<text x='" << ml + pw / 2 << "' y='" << height - 10
      << "' text-anchor='middle' font-size='13' font-family='sans-serif'>time</text>\n";
  out << "<text x='16' y='" << mt + ph / 2
      << "' text-anchor='middle' font-size='13' font-family='sans-serif' transform='rotate(-90 16 "
      << mt + ph / 2 << ")'>AUC(t)</text>\n";

  // series
  for (const auto& s : series) {
    std::string points;
    for (std::size_t i = 0; i < s.curve->grid.size(); ++i) {
      if (!AucCurve::defined(s.curve->auc[i])) continue;
      points += std::to_string(px(s.curve->grid[i])) + "," +
                std::to_string(py(s.curve->auc[i])) + " ";
    }
    if (!points.empty())
      out << "<polyline points='" << points << "' fill='none' stroke='" << s.color
          << "' stroke-width='1'/>\n";
    for (std::size_t i = 0; i < s.curve->grid.size(); ++i) {
      if (!AucCurve::defined(s.curve->auc[i])) continue;
      out << "<circle cx='" << px(s.curve->grid[i]) << "' cy='" << py(s.curve->auc[i])
          << "' r='3' fill='" << s.color << "'/>\n";
    }
  }

  // legend
  double ly = mt + 12;
  for (const auto& s : series) {
    out << "<circle cx='" << ml + pw - 130 << "' cy='" << ly << "' r='4' fill='" << s.color
        << "'/>\n";
    out << "<text x='" << ml + pw - 120 << "' y='" << ly + 4
        << "' font-size='12' font-family='sans-serif'>" << s.label << "</text>\n";
    ly += 18;
  }
  out << "</svg>\n";
}

}  // namespace sbrsf
