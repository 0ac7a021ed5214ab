// Copyright 2026 The Gibbs Control Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Self-contained SVG plots: line (optionally log-log), histogram and 2D
// trajectory overlay.

#ifndef GIBBS_CONTROL_HARNESS_PLOT_HPP_
#define GIBBS_CONTROL_HARNESS_PLOT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gibbs_control/core.hpp"
#include "gibbs_control/envs.hpp"

namespace gibbs::harness {

enum class PlotKind { kLine, kHistogram, kTrajectoryOverlay };

/// One named series. For histograms only `x` is read. Series sharing a label
/// share a color and a single legend entry.
struct Series {
  std::string label;
  Vector x;
  Vector y;
  std::string dash;  // SVG stroke-dasharray, empty for solid
  double opacity = 1.0;
  double width = 1.5;
};

struct PlotSpec {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "y";
  bool log_x = false;
  bool log_y = false;
  std::size_t bins = 40;
  bool markers = false;
  std::optional<CircleObstacle> obstacle;
};

inline Series named_series(std::string label) {
  Series s;
  s.label = std::move(label);
  return s;
}

inline PlotSpec labeled(std::string title, std::string x_label, std::string y_label) {
  PlotSpec spec;
  spec.title = std::move(title);
  spec.x_label = std::move(x_label);
  spec.y_label = std::move(y_label);
  return spec;
}

// 6 significant digits.
inline std::string format_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

namespace detail {

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* palette(std::size_t k) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return colors[k % 8];
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;

  void include(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Widen a zero-width range so a single point still gets axes.
  void finish() {
    if (log) {
      lo = std::log10(lo);
      hi = std::log10(hi);
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(lo))) {
      const double pad = lo == 0.0 ? 0.5 : 0.1 * std::abs(lo);
      lo -= pad;
      hi += pad;
    }
  }
  double unit(double v) const {
    return ((log ? std::log10(v) : v) - lo) / (hi - lo);
  }
  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (double e = std::ceil(lo); e <= std::floor(hi) + 1e-9; e += 1.0) {
        t.push_back(std::pow(10.0, e));
      }
      if (t.size() >= 2) return t;
      t.clear();
      for (int k = 0; k <= 4; ++k) t.push_back(std::pow(10.0, lo + (hi - lo) * k / 4));
      return t;
    }
    // 1, 2 or 5 times a power of ten, about five ticks.
    const double raw = (hi - lo) / 4.0;
    const double p = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / p;
    const double step = (f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0) * p;
    for (double k = std::ceil(lo / step); k * step <= hi + 1e-9 * step; k += 1.0) {
      t.push_back(k * step + 0.0);
    }
    return t;
  }
};

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 80, kRight = 150, kTop = 40, kBottom = 60;

}  // namespace detail

/// Renders the plot. Empty input, or a series with no points, is a contract
/// violation; log axes require positive values.
inline std::string render_svg(const std::vector<Series>& series, PlotKind kind,
                              const PlotSpec& spec = {}) {
  using detail::Axis;
  require(!series.empty(), "emit_plot: empty series list");
  for (const auto& s : series) {
    require(!s.x.empty(), "emit_plot: series '" + s.label + "' is empty");
    require(kind == PlotKind::kHistogram || s.y.size() == s.x.size(),
            "emit_plot: series '" + s.label + "' has mismatched x/y");
  }
  require(kind != PlotKind::kHistogram || spec.bins >= 1, "emit_plot: bins >= 1");

  // Distinct labels in first-seen order.
  std::vector<std::string> labels;
  auto color_of = [&labels](const std::string& l) {
    return detail::palette(std::find(labels.begin(), labels.end(), l) - labels.begin());
  };
  for (const auto& s : series) {
    if (std::find(labels.begin(), labels.end(), s.label) == labels.end()) {
      labels.push_back(s.label);
    }
  }

  Axis ax{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          spec.log_x && kind == PlotKind::kLine};
  Axis ay{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          spec.log_y && kind == PlotKind::kLine};

  // Histogram counts, normalized to densities.
  struct Hist {
    double lo, width;
    Vector density;
  };
  std::vector<Hist> hists;
  if (kind == PlotKind::kHistogram) {
    for (const auto& s : series) {
      for (double v : s.x) ax.include(v);
    }
    double lo = ax.lo, hi = ax.hi;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double w = (hi - lo) / static_cast<double>(spec.bins);
    for (const auto& s : series) {
      Hist h{lo, w, Vector(spec.bins, 0.0)};
      for (double v : s.x) {
        const auto b = std::min<std::size_t>(
            spec.bins - 1, static_cast<std::size_t>((v - lo) / w));
        h.density[b] += 1.0 / (static_cast<double>(s.x.size()) * w);
      }
      hists.push_back(std::move(h));
    }
    ax.lo = lo;
    ax.hi = hi;
    ay.include(0.0);
    for (const auto& h : hists) {
      for (double d : h.density) ay.include(d);
    }
  } else {
    for (const auto& s : series) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        require(!ax.log || s.x[i] > 0.0, "emit_plot: log axis needs positive x");
        require(!ay.log || s.y[i] > 0.0, "emit_plot: log axis needs positive y");
        ax.include(s.x[i]);
        ay.include(s.y[i]);
      }
    }
    if (kind == PlotKind::kTrajectoryOverlay && spec.obstacle) {
      const auto& o = *spec.obstacle;
      ax.include(o.center[0] - o.radius);
      ax.include(o.center[0] + o.radius);
      ay.include(o.center[1] - o.radius);
      ay.include(o.center[1] + o.radius);
    }
  }
  ax.finish();
  ay.finish();

  using detail::kBottom, detail::kHeight, detail::kLeft, detail::kRight,
      detail::kTop, detail::kWidth;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + pw * ax.unit(v); };
  auto py = [&](double v) { return kTop + ph * (1.0 - ay.unit(v)); };
  auto num = [](double v) { return format_tick(v); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
         "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
         num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-size=\"14\">" + detail::escape_xml(spec.title) + "</text>\n";
  }

  // Axes, ticks, labels.
  svg += "<g stroke=\"black\" fill=\"none\">\n<rect x=\"" + num(kLeft) + "\" y=\"" +
         num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) + "\"/>\n";
  for (double t : ax.ticks()) {
    const double x = px(t);
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(x) +
           "\" y2=\"" + num(kTop + ph + 5) + "\"/>\n";
  }
  for (double t : ay.ticks()) {
    const double y = py(t);
    svg += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(y) + "\" x2=\"" +
           num(kLeft) + "\" y2=\"" + num(y) + "\"/>\n";
  }
  svg += "</g>\n<g fill=\"black\">\n";
  for (double t : ax.ticks()) {
    svg += "<text x=\"" + num(px(t)) + "\" y=\"" + num(kTop + ph + 18) +
           "\" text-anchor=\"middle\">" + num(t) + "</text>\n";
  }
  for (double t : ay.ticks()) {
    svg += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(py(t) + 4) +
           "\" text-anchor=\"end\">" + num(t) + "</text>\n";
  }
  svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 15) +
         "\" text-anchor=\"middle\">" + detail::escape_xml(spec.x_label) + "</text>\n";
  svg += "<text transform=\"translate(18," + num(kTop + ph / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + detail::escape_xml(spec.y_label) +
         "</text>\n</g>\n";

  if (kind == PlotKind::kTrajectoryOverlay && spec.obstacle) {
    const auto& o = *spec.obstacle;
    svg += "<ellipse class=\"obstacle\" cx=\"" + num(px(o.center[0])) + "\" cy=\"" +
           num(py(o.center[1])) + "\" rx=\"" +
           num(std::abs(px(o.center[0] + o.radius) - px(o.center[0]))) + "\" ry=\"" +
           num(std::abs(py(o.center[1] + o.radius) - py(o.center[1]))) +
           "\" fill=\"#cccccc\" stroke=\"black\"/>\n";
  }

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const std::string color = color_of(s.label);
    const std::string stroke = " stroke=\"" + color + "\" stroke-width=\"" +
                               num(s.width) + "\" stroke-opacity=\"" + num(s.opacity) +
                               "\"" +
                               (s.dash.empty() ? "" : " stroke-dasharray=\"" + s.dash + "\"");
    if (kind == PlotKind::kHistogram) {
      const auto& h = hists[k];
      std::string pts;
      for (std::size_t b = 0; b < h.density.size(); ++b) {
        const double x0 = h.lo + h.width * static_cast<double>(b);
        pts += num(px(x0)) + "," + num(py(h.density[b])) + " " +
               num(px(x0 + h.width)) + "," + num(py(h.density[b])) + " ";
      }
      svg += "<polyline fill=\"none\"" + stroke + " points=\"" + pts + "\"/>\n";
      continue;
    }
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
    }
    svg += "<polyline fill=\"none\"" + stroke + " points=\"" + pts + "\"/>\n";
    if (spec.markers || s.x.size() == 1) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        svg += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i])) +
               "\" r=\"3\" fill=\"" + color + "\"/>\n";
      }
    }
  }

  // Legend.
  svg += "<g class=\"legend\">\n";
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const double y = kTop + 10 + 18 * static_cast<double>(k);
    const double x = kLeft + pw + 12;
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x + 20) +
           "\" y2=\"" + num(y) + "\" stroke=\"" + detail::palette(k) +
           "\" stroke-width=\"2\"/>\n<text x=\"" + num(x + 26) + "\" y=\"" +
           num(y + 4) + "\">" + detail::escape_xml(labels[k]) + "</text>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

inline void emit_plot(const std::vector<Series>& series, PlotKind kind,
                      const std::filesystem::path& path, const PlotSpec& spec = {}) {
  const std::string svg = render_svg(series, kind, spec);
  std::ofstream out(path, std::ios::binary);
  out << svg;
  if (!out) throw std::runtime_error("emit_plot: cannot write " + path.string());
}

}  // namespace gibbs::harness

#endif  // GIBBS_CONTROL_HARNESS_PLOT_HPP_
