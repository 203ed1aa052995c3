#pragma once

// Minimal standalone SVG line charts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace smclab {

struct Trace {
  std::string label;
  std::vector<double> t;
  std::vector<double> y;
};

/// Axis label with units for a run CSV column name (node suffix ignored).
inline std::string column_label(const std::string& column) {
  const std::string base = column.substr(0, column.find('_'));
  if (base == "t") return "t (s)";
  if (base == "x") return column + " (rad or -)";
  if (base == "v") return column + " (rad/s or 1/s)";
  if (base == "u") return column + " (input units)";
  if (base == "alpha" || base == "beta" || base == "s") {
    return column + " (rad/s or 1/s)";
  }
  if (base == "V") return column + " ((rad/s)^2)";
  if (base == "d") return column + " (rad/s^2)";
  return column;
}

namespace detail {

inline std::string fmt(double v, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
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

/// Keeps the first, min, max and last point of each bucket so switching
/// stays visible after decimation.
inline std::vector<std::size_t> decimate(const std::vector<double>& y,
                                         std::size_t buckets) {
  std::vector<std::size_t> idx;
  const std::size_t n = y.size();
  if (n <= 4 * buckets) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  const std::size_t width = (n + buckets - 1) / buckets;
  for (std::size_t b = 0; b < n; b += width) {
    const std::size_t e = std::min(n, b + width);
    std::size_t lo = b, hi = b;
    for (std::size_t i = b; i < e; ++i) {
      if (y[i] < y[lo]) lo = i;
      if (y[i] > y[hi]) hi = i;
    }
    std::vector<std::size_t> pts{b, lo, hi, e - 1};
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    idx.insert(idx.end(), pts.begin(), pts.end());
  }
  return idx;
}

}  // namespace detail

inline void write_svg(std::ostream& os, const std::vector<Trace>& traces,
                      const std::string& x_label, const std::string& y_label,
                      const std::string& title = "") {
  constexpr double W = 800, H = 450, L = 80, R = 170, T = 40, B = 60;
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const auto& tr : traces) {
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
      if (!std::isfinite(tr.t[i]) || !std::isfinite(tr.y[i])) continue;
      x0 = std::min(x0, tr.t[i]);
      x1 = std::max(x1, tr.t[i]);
      y0 = std::min(y0, tr.y[i]);
      y1 = std::max(y1, tr.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 1, y1 += 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
     << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"24\" "
       << "text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
       << detail::escape_xml(title) << "</text>\n";
  }
  os << "<g stroke=\"#ccc\" stroke-width=\"1\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double gx = x0 + (x1 - x0) * i / 5.0;
    const double gy = y0 + (y1 - y0) * i / 5.0;
    os << "<line x1=\"" << detail::fmt(px(gx)) << "\" y1=\"" << T << "\" x2=\""
       << detail::fmt(px(gx)) << "\" y2=\"" << (H - B) << "\"/>\n"
       << "<line x1=\"" << L << "\" y1=\"" << detail::fmt(py(gy)) << "\" x2=\""
       << (W - R) << "\" y2=\"" << detail::fmt(py(gy)) << "\"/>\n";
  }
  os << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double gx = x0 + (x1 - x0) * i / 5.0;
    const double gy = y0 + (y1 - y0) * i / 5.0;
    os << "<text x=\"" << detail::fmt(px(gx)) << "\" y=\"" << (H - B + 16)
       << "\" text-anchor=\"middle\">" << detail::fmt(gx) << "</text>\n"
       << "<text x=\"" << (L - 6) << "\" y=\"" << detail::fmt(py(gy) + 4)
       << "\" text-anchor=\"end\">" << detail::fmt(gy) << "</text>\n";
  }
  os << "</g>\n"
     << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << (W - L - R)
     << "\" height=\"" << (H - T - B)
     << "\" fill=\"none\" stroke=\"black\"/>\n"
     << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"" << (H - 18)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
     << detail::escape_xml(x_label) << "</text>\n"
     << "<text transform=\"translate(20," << (T + (H - T - B) / 2)
     << ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"13\">"
     << detail::escape_xml(y_label) << "</text>\n";

  for (std::size_t k = 0; k < traces.size(); ++k) {
    const auto& tr = traces[k];
    const char* color = kColors[k % std::size(kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i : detail::decimate(tr.y, 1000)) {
      if (!std::isfinite(tr.t[i]) || !std::isfinite(tr.y[i])) continue;
      os << (first ? "" : " ") << detail::fmt(px(tr.t[i]), "%.2f") << ','
         << detail::fmt(py(tr.y[i]), "%.2f");
      first = false;
    }
    os << "\"/>\n";
    const double ly = T + 10 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << (W - R + 10) << "\" y1=\"" << ly << "\" x2=\""
       << (W - R + 30) << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << (W - R + 35) << "\" y=\"" << (ly + 4)
       << "\" font-family=\"sans-serif\" font-size=\"11\">"
       << detail::escape_xml(tr.label) << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace smclab
