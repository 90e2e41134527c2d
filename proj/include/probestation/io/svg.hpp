#pragma once

// Minimal static SVG line plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace probestation::io {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool markers = false;
};

struct PlotMarker {
  double x = 0.0;
  std::string label;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  std::vector<PlotMarker> markers;  // vertical annotation lines
  int width = 720;
  int height = 480;
};

namespace detail {

inline std::string fmt(double v, const char* spec = "%g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      default: o += c;
    }
  }
  return o;
}

/// 1-2-5 tick step giving roughly `target` intervals.
inline double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace detail

inline std::string render_svg(const Plot& p) {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  for (const auto& s : p.series) {
    for (double v : s.x) {
      xmin = std::min(xmin, v);
      xmax = std::max(xmax, v);
    }
    for (double v : s.y) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  ymin = std::min(ymin, 0.0);
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  ymax += 0.05 * (ymax - ymin);

  const double left = 80;
  const double right = 20;
  const double top = 40;
  const double bottom = 60;
  const double pw = p.width - left - right;
  const double ph = p.height - top - bottom;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(p.width) + "\" height=\"" +
       std::to_string(p.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + detail::fmt(p.width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       detail::escape(p.title) + "</text>\n";
  o += "<rect x=\"" + detail::fmt(left) + "\" y=\"" + detail::fmt(top) + "\" width=\"" + detail::fmt(pw) +
       "\" height=\"" + detail::fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  const double xs = detail::nice_step(xmax - xmin, 8);
  for (double t = std::ceil(xmin / xs) * xs; t <= xmax + 1e-9 * xs; t += xs) {
    o += "<line x1=\"" + detail::fmt(sx(t)) + "\" y1=\"" + detail::fmt(top + ph) + "\" x2=\"" + detail::fmt(sx(t)) +
         "\" y2=\"" + detail::fmt(top + ph + 5) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + detail::fmt(sx(t)) + "\" y=\"" + detail::fmt(top + ph + 18) + "\" text-anchor=\"middle\">" +
         detail::fmt(t) + "</text>\n";
  }
  const double ys = detail::nice_step(ymax - ymin, 6);
  for (double t = std::ceil(ymin / ys) * ys; t <= ymax + 1e-9 * ys; t += ys) {
    o += "<line x1=\"" + detail::fmt(left - 5) + "\" y1=\"" + detail::fmt(sy(t)) + "\" x2=\"" + detail::fmt(left) +
         "\" y2=\"" + detail::fmt(sy(t)) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + detail::fmt(left - 8) + "\" y=\"" + detail::fmt(sy(t) + 4) + "\" text-anchor=\"end\">" +
         detail::fmt(t) + "</text>\n";
  }
  o += "<text x=\"" + detail::fmt(left + pw / 2) + "\" y=\"" + detail::fmt(p.height - 15.0) +
       "\" text-anchor=\"middle\">" + detail::escape(p.x_label) + "</text>\n";
  o += "<text transform=\"translate(20," + detail::fmt(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       detail::escape(p.y_label) + "</text>\n";

  for (const auto& m : p.markers) {
    if (m.x < xmin || m.x > xmax) continue;
    o += "<line x1=\"" + detail::fmt(sx(m.x)) + "\" y1=\"" + detail::fmt(top) + "\" x2=\"" + detail::fmt(sx(m.x)) +
         "\" y2=\"" + detail::fmt(top + ph) + "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
    o += "<text x=\"" + detail::fmt(sx(m.x) + 3) + "\" y=\"" + detail::fmt(top + 12) + "\" fill=\"#555\">" +
         detail::escape(m.label) + "</text>\n";
  }

  double legend_y = top + 16;
  for (const auto& s : p.series) {
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      pts += detail::fmt(sx(s.x[i]), "%.2f") + "," + detail::fmt(sy(s.y[i]), "%.2f") + " ";
    }
    o += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        o += "<circle cx=\"" + detail::fmt(sx(s.x[i]), "%.2f") + "\" cy=\"" + detail::fmt(sy(s.y[i]), "%.2f") +
             "\" r=\"3\" fill=\"" + s.color + "\"/>\n";
      }
    }
    if (!s.label.empty()) {
      o += "<line x1=\"" + detail::fmt(left + pw - 150) + "\" y1=\"" + detail::fmt(legend_y - 4) + "\" x2=\"" +
           detail::fmt(left + pw - 130) + "\" y2=\"" + detail::fmt(legend_y - 4) + "\" stroke=\"" + s.color +
           "\" stroke-width=\"2\"/>\n";
      o += "<text x=\"" + detail::fmt(left + pw - 125) + "\" y=\"" + detail::fmt(legend_y) + "\">" +
           detail::escape(s.label) + "</text>\n";
      legend_y += 16;
    }
  }
  o += "</svg>\n";
  return o;
}

}  // namespace probestation::io
