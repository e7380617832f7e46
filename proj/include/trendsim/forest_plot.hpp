#pragma once

// Horizontal forest plot of simultaneous confidence intervals as SVG.
// Output depends only on the input rows, so identical reports give
// byte-identical files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendsim/errors.hpp"

namespace trendsim {

struct PlotRow {
  std::string label;
  double estimate = 0.0;
  double lower = 0.0;  // may be -inf
  double upper = 0.0;  // may be +inf
};

struct PlotOptions {
  std::string title = "Simultaneous confidence intervals";
  double width = 900.0;
  double row_height = 16.0;
  double font_size = 11.0;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
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

inline std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

// Tick step from {1, 2, 5} x 10^e giving about five ticks.
inline double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

}  // namespace detail

inline std::string forest_plot_svg(const std::vector<PlotRow>& rows, const PlotOptions& opt = {}) {
  if (rows.empty()) throw DataError("forest plot needs at least one contrast");
  double lo = 0.0, hi = 0.0;
  std::size_t label_chars = 0;
  for (const auto& r : rows) {
    if (!std::isfinite(r.estimate)) throw DataError("non-finite estimate for '" + r.label + "'");
    if (std::isnan(r.lower) || std::isnan(r.upper) || r.lower > r.upper) {
      throw DataError("invalid interval for '" + r.label + "'");
    }
    for (double v : {r.estimate, r.lower, r.upper}) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    label_chars = std::max(label_chars, r.label.size());
  }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double step = detail::nice_step(hi - lo);
  lo = std::floor(lo / step) * step;
  hi = std::ceil(hi / step) * step;

  const double char_w = 0.6 * opt.font_size;
  const double left = 10.0 + char_w * static_cast<double>(label_chars) + 10.0;
  const double right = std::max(left + 200.0, opt.width - 20.0);
  const double top = 40.0;
  const double plot_h = opt.row_height * static_cast<double>(rows.size());
  const double height = top + plot_h + 40.0;
  const double width = right + 20.0;
  auto x_of = [&](double v) {
    v = std::clamp(v, lo, hi);
    return left + (v - lo) / (hi - lo) * (right - left);
  };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt("%.0f", width) + "\" height=\"" +
       detail::fmt("%.0f", height) + "\" font-family=\"monospace\" font-size=\"" + detail::fmt("%.0f", opt.font_size) +
       "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text class=\"title\" x=\"" + detail::fmt("%.2f", 0.5 * (left + right)) +
       "\" y=\"20\" text-anchor=\"middle\">" + detail::svg_escape(opt.title) + "</text>\n";

  // axis and ticks
  const double axis_y = top + plot_h + 6.0;
  s += "<g class=\"axis\" stroke=\"black\">\n";
  s += "<line x1=\"" + detail::fmt("%.2f", left) + "\" y1=\"" + detail::fmt("%.2f", axis_y) + "\" x2=\"" +
       detail::fmt("%.2f", right) + "\" y2=\"" + detail::fmt("%.2f", axis_y) + "\"/>\n";
  const int ticks = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= ticks; ++i) {
    double v = lo + step * i;
    if (std::fabs(v) < 1e-9 * step) v = 0.0;
    const double x = x_of(v);
    s += "<line x1=\"" + detail::fmt("%.2f", x) + "\" y1=\"" + detail::fmt("%.2f", axis_y) + "\" x2=\"" +
         detail::fmt("%.2f", x) + "\" y2=\"" + detail::fmt("%.2f", axis_y + 4.0) + "\"/>\n";
    s += "<text stroke=\"none\" x=\"" + detail::fmt("%.2f", x) + "\" y=\"" + detail::fmt("%.2f", axis_y + 16.0) +
         "\" text-anchor=\"middle\">" + detail::fmt("%g", v) + "</text>\n";
  }
  s += "</g>\n";

  const double x0 = x_of(0.0);
  s += "<line class=\"reference\" x1=\"" + detail::fmt("%.2f", x0) + "\" y1=\"" + detail::fmt("%.2f", top - 4.0) +
       "\" x2=\"" + detail::fmt("%.2f", x0) + "\" y2=\"" + detail::fmt("%.2f", axis_y) +
       "\" stroke=\"gray\" stroke-dasharray=\"4,3\"/>\n";

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double y = top + opt.row_height * (static_cast<double>(i) + 0.5);
    const std::string ys = detail::fmt("%.2f", y);
    s += "<g class=\"contrast\">\n";
    s += "<text x=\"10\" y=\"" + detail::fmt("%.2f", y + 0.35 * opt.font_size) + "\">" + detail::svg_escape(r.label) +
         "</text>\n";
    s += "<line x1=\"" + detail::fmt("%.2f", x_of(r.lower)) + "\" y1=\"" + ys + "\" x2=\"" +
         detail::fmt("%.2f", x_of(r.upper)) + "\" y2=\"" + ys + "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    s += "<circle cx=\"" + detail::fmt("%.2f", x_of(r.estimate)) + "\" cy=\"" + ys + "\" r=\"3\" fill=\"black\"/>\n";
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

// Rows from an analysis report JSON ("contrasts" with label, estimate and
// ci; a null bound is an open side).
inline std::vector<PlotRow> plot_rows_from_report(const nlohmann::ordered_json& report) {
  std::vector<PlotRow> rows;
  try {
    for (const auto& c : report.at("contrasts")) {
      PlotRow r;
      r.label = c.at("label").get<std::string>();
      r.estimate = c.at("estimate").get<double>();
      const auto& ci = c.at("ci");
      if (!ci.is_array() || ci.size() != 2) throw DataError("contrast '" + r.label + "' has no [lower, upper] ci");
      r.lower = ci[0].is_null() ? -HUGE_VAL : ci[0].get<double>();
      r.upper = ci[1].is_null() ? HUGE_VAL : ci[1].get<double>();
      rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return rows;
}

}  // namespace trendsim
