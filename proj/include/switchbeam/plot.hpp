#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "switchbeam/experiment.hpp"

namespace switchbeam {

enum class PlotX { Auto, SnrDb, NStreams };

struct AxisRange {
  double lo = 0.0;
  double hi = 1.0;
};

/// Data range padded by `margin` on each side (5% by default); degenerate
/// spans get a symmetric pad so the point stays strictly inside.
inline AxisRange padded_range(double min_v, double max_v, double margin = 0.05) {
  if (max_v < min_v) std::swap(min_v, max_v);
  double span = max_v - min_v;
  if (span == 0.0) span = std::max(1.0, std::abs(min_v));
  return {min_v - margin * span, max_v + margin * span};
}

namespace detail {

inline std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string format_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

constexpr const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                         "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace detail

/// Static SVG: mean spectral efficiency against SNR (or stream count), one
/// polyline per method, fixed layout, no external renderer. Output bytes are
/// a pure function of the input rows.
inline std::string render_plot_svg(const std::vector<SummaryRow>& rows, PlotX x_mode) {
  if (rows.empty()) throw std::invalid_argument("render_plot_svg: no summary rows");
  if (x_mode == PlotX::Auto) {
    std::vector<double> snrs;
    for (const SummaryRow& r : rows) snrs.push_back(r.snr_db);
    std::sort(snrs.begin(), snrs.end());
    snrs.erase(std::unique(snrs.begin(), snrs.end()), snrs.end());
    x_mode = snrs.size() > 1 ? PlotX::SnrDb : PlotX::NStreams;
  }
  const bool x_is_snr = x_mode == PlotX::SnrDb;

  std::map<Method, std::vector<std::pair<double, double>>> series;
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  bool first = true;
  for (const SummaryRow& r : rows) {
    const double x = x_is_snr ? r.snr_db : static_cast<double>(r.n_s);
    series[r.method].push_back({x, r.mean_se});
    if (first) {
      x_min = x_max = x;
      y_min = y_max = r.mean_se;
      first = false;
    } else {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, r.mean_se);
      y_max = std::max(y_max, r.mean_se);
    }
  }
  for (auto& [method, pts] : series) std::sort(pts.begin(), pts.end());

  const AxisRange xr = padded_range(x_min, x_max);
  const AxisRange yr = padded_range(y_min, y_max);

  const double width = 800.0, height = 560.0;
  const double left = 70.0, right = width - 170.0, top = 30.0, bottom = height - 50.0;
  auto to_px_x = [&](double v) {
    return left + (v - xr.lo) / (xr.hi - xr.lo) * (right - left);
  };
  auto to_px_y = [&](double v) {
    return bottom - (v - yr.lo) / (yr.hi - yr.lo) * (bottom - top);
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
      << "\">\n"
      << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";

  // axes
  svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right
      << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
  const int n_ticks = 5;
  for (int t = 0; t <= n_ticks; ++t) {
    const double fx = xr.lo + (xr.hi - xr.lo) * t / n_ticks;
    const double fy = yr.lo + (yr.hi - yr.lo) * t / n_ticks;
    const double px = to_px_x(fx), py = to_px_y(fy);
    svg << "<line x1=\"" << detail::format_coord(px) << "\" y1=\"" << bottom
        << "\" x2=\"" << detail::format_coord(px) << "\" y2=\"" << bottom + 5
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << detail::format_coord(px) << "\" y=\"" << bottom + 20
        << "\" font-size=\"12\" text-anchor=\"middle\">" << detail::format_tick(fx)
        << "</text>\n"
        << "<line x1=\"" << left - 5 << "\" y1=\"" << detail::format_coord(py)
        << "\" x2=\"" << left << "\" y2=\"" << detail::format_coord(py)
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << left - 8 << "\" y=\"" << detail::format_coord(py + 4)
        << "\" font-size=\"12\" text-anchor=\"end\">" << detail::format_tick(fy)
        << "</text>\n";
  }
  svg << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 12
      << "\" font-size=\"14\" text-anchor=\"middle\">"
      << (x_is_snr ? "SNR (dB)" : "Data streams") << "</text>\n"
      << "<text x=\"18\" y=\"" << (top + bottom) / 2
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (top + bottom) / 2 << ")\">Spectral efficiency (bits/s/Hz)</text>\n";

  int idx = 0;
  for (const auto& [method, pts] : series) {
    const char* color =
        detail::kSeriesColors[idx % (sizeof(detail::kSeriesColors) /
                                     sizeof(detail::kSeriesColors[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t p = 0; p < pts.size(); ++p) {
      if (p) svg << ' ';
      svg << detail::format_coord(to_px_x(pts[p].first)) << ','
          << detail::format_coord(to_px_y(pts[p].second));
    }
    svg << "\"/>\n";
    for (const auto& [px, py] : pts)
      svg << "<circle cx=\"" << detail::format_coord(to_px_x(px)) << "\" cy=\""
          << detail::format_coord(to_px_y(py)) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    const double ly = top + 18.0 * idx + 10.0;
    svg << "<line x1=\"" << right + 12 << "\" y1=\"" << ly << "\" x2=\""
        << right + 40 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << right + 46 << "\" y=\"" << ly + 4
        << "\" font-size=\"12\">" << method_name(method) << "</text>\n";
    ++idx;
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void emit_plot(const std::vector<SummaryRow>& rows, const std::string& path,
                      PlotX x_mode = PlotX::Auto) {
  write_text_file(path, render_plot_svg(rows, x_mode));
}

}  // namespace switchbeam
