#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "hgac/harness/metrics.hpp"

namespace hgac {

/// Trailing-window moving average.
inline std::vector<double> smooth_series(const std::vector<double>& xs, int window) {
  std::vector<double> out(xs.size());
  double acc = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    acc += xs[i];
    if (i >= static_cast<size_t>(window)) acc -= xs[i - window];
    out[i] = acc / std::min<size_t>(i + 1, window);
  }
  return out;
}

/// Minimal reward-curve rendering: episode index vs smoothed team return.
inline void write_curve_svg(const std::string& path, const std::vector<double>& team_returns,
                            int window = 100, const std::string& title = "team return") {
  std::ofstream f(path);
  if (!f) throw ConfigError("svg: cannot open '" + path + "' for writing");
  const int w = 800, h = 500, ml = 70, mr = 20, mt = 40, mb = 50;
  std::vector<double> ys = smooth_series(team_returns, window);
  double ymin = 0.0, ymax = 1.0;
  if (!ys.empty()) {
    ymin = *std::min_element(ys.begin(), ys.end());
    ymax = *std::max_element(ys.begin(), ys.end());
    if (ymax - ymin < 1e-12) {
      ymax += 0.5;
      ymin -= 0.5;
    }
  }
  auto px = [&](size_t i) {
    double span = ys.size() > 1 ? static_cast<double>(ys.size() - 1) : 1.0;
    return ml + (w - ml - mr) * (static_cast<double>(i) / span);
  };
  auto py = [&](double y) { return mt + (h - mt - mb) * (1.0 - (y - ymin) / (ymax - ymin)); };

  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  f << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
    << title << " (window " << window << ")</text>\n";
  f << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
    << h - mb << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
    << "\" stroke=\"black\"/>\n";
  f << "<text x=\"" << ml - 8 << "\" y=\"" << py(ymax) + 4
    << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_double(ymax, 4) << "</text>\n";
  f << "<text x=\"" << ml - 8 << "\" y=\"" << py(ymin) + 4
    << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_double(ymin, 4) << "</text>\n";
  f << "<text x=\"" << w - mr << "\" y=\"" << h - mb + 20
    << "\" text-anchor=\"end\" font-size=\"11\">episode " << (ys.empty() ? 0 : ys.size() - 1)
    << "</text>\n";
  if (!ys.empty()) {
    f << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < ys.size(); ++i)
      f << fmt_double(px(i), 7) << ',' << fmt_double(py(ys[i]), 7) << ' ';
    f << "\"/>\n";
  }
  f << "</svg>\n";
}

}  // namespace hgac
