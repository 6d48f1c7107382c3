#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lare/error.hpp"

namespace lare::cli {

struct Series {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

// Minimal dependency-free line chart. Good enough to eyeball a sweep or a
// spectrum; anything fancier belongs in a notebook.
inline void write_line_chart(const std::filesystem::path& path,
                             const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<Series>& series) {
  static const char* kColors[] = {"#1b6ca8", "#c0392b", "#27ae60", "#8e44ad",
                                  "#d35400", "#16a085", "#7f8c8d", "#2c3e50"};
  const double width = 720, height = 440;
  const double left = 70, right = 30, top = 40, bottom = 50;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.xs.size(); ++i) {
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
      if (first) {
        x_min = x_max = s.xs[i];
        y_min = y_max = s.ys[i];
        first = false;
      } else {
        x_min = std::min(x_min, s.xs[i]);
        x_max = std::max(x_max, s.xs[i]);
        y_min = std::min(y_min, s.ys[i]);
        y_max = std::max(y_max, s.ys[i]);
      }
    }
  }
  if (x_max <= x_min) x_max = x_min + 1;
  if (y_max <= y_min) y_max = y_min + 1;

  auto sx = [&](double x) {
    return left + (x - x_min) / (x_max - x_min) * (width - left - right);
  };
  auto sy = [&](double y) {
    return height - bottom -
           (y - y_min) / (y_max - y_min) * (height - top - bottom);
  };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };

  std::ofstream out(path);
  if (!out) fail_io("cannot open " + path.string() + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

  // frame and axis extents
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\""
      << width - left - right << "\" height=\"" << height - top - bottom
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  const char* kTextStyle = "font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\"";
  out << "<text x=\"" << left << "\" y=\"" << height - bottom + 16 << "\" "
      << kTextStyle << ">" << num(x_min) << "</text>\n"
      << "<text x=\"" << width - right << "\" y=\"" << height - bottom + 16
      << "\" text-anchor=\"end\" " << kTextStyle << ">" << num(x_max)
      << "</text>\n"
      << "<text x=\"" << left - 6 << "\" y=\"" << height - bottom
      << "\" text-anchor=\"end\" " << kTextStyle << ">" << num(y_min)
      << "</text>\n"
      << "<text x=\"" << left - 6 << "\" y=\"" << top + 10
      << "\" text-anchor=\"end\" " << kTextStyle << ">" << num(y_max)
      << "</text>\n"
      << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" " << kTextStyle << ">" << x_label
      << "</text>\n"
      << "<text x=\"16\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << height / 2
      << ")\" " << kTextStyle << ">" << y_label << "</text>\n";

  for (size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % (sizeof kColors / sizeof *kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.xs.size(); ++i) {
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
      out << num(sx(s.xs[i])) << ',' << num(sy(s.ys[i])) << ' ';
    }
    out << "\"/>\n";
    double ly = top + 14 + 14 * static_cast<double>(k);
    out << "<line x1=\"" << left + 8 << "\" y1=\"" << ly - 4 << "\" x2=\""
        << left + 28 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << left + 34 << "\" y=\"" << ly << "\" " << kTextStyle
        << ">" << s.name << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) fail_io("short write to " + path.string());
}

}  // namespace lare::cli
