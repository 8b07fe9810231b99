#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "overparam/csv.hpp"
#include "overparam/errors.hpp"

namespace overparam {

// Standalone SVG plots for run directories. No timestamps or other
// run-varying content: reruns must be byte-identical.

struct Series {
  std::string label;
  std::string color;
  bool dashed = false;
  std::vector<double> xs;
  std::vector<double> ys;
};

namespace svg_detail {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 64, kRight = 24, kTop = 40, kBottom = 48;

inline std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Range {
  double lo = 0, hi = 1;
  double scale(double v, double pixel_lo, double pixel_hi) const {
    double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    return pixel_lo + t * (pixel_hi - pixel_lo);
  }
};

inline Range find_range(const std::vector<Series>& series, bool x_axis) {
  Range r{1e300, -1e300};
  for (const auto& s : series)
    for (double v : x_axis ? s.xs : s.ys) {
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  if (r.lo > r.hi) r = {0, 1};
  if (r.lo == r.hi) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  return r;
}

inline void write_frame(std::ofstream& out, const std::string& title,
                        const Range& xr, const Range& yr) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2
      << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">" << title << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
      << kWidth - kLeft - kRight << "\" height=\"" << kHeight - kTop - kBottom
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  auto label = [&](double x, double y, const std::string& text,
                   const char* anchor) {
    out << "<text x=\"" << coord(x) << "\" y=\"" << coord(y) << "\" text-anchor=\""
        << anchor << "\" font-family=\"sans-serif\" font-size=\"11\">" << text
        << "</text>\n";
  };
  label(kLeft, kHeight - kBottom + 16, fmt_double(xr.lo), "middle");
  label(kWidth - kRight, kHeight - kBottom + 16, fmt_double(xr.hi), "middle");
  label(kLeft - 6, kHeight - kBottom, fmt_double(yr.lo), "end");
  label(kLeft - 6, kTop + 10, fmt_double(yr.hi), "end");
}

}  // namespace svg_detail

inline void write_line_svg(const std::string& path, const std::string& title,
                           const std::vector<Series>& series) {
  using namespace svg_detail;
  Range xr = find_range(series, true);
  Range yr = find_range(series, false);
  auto out = open_output(path);
  write_frame(out, title, xr, yr);
  double legend_y = kTop + 14;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\"";
    if (s.dashed) out << " stroke-dasharray=\"6 4\"";
    out << " stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (i) out << " ";
      out << coord(xr.scale(s.xs[i], kLeft, kWidth - kRight)) << ","
          << coord(yr.scale(s.ys[i], kHeight - kBottom, kTop));
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kRight - 6 << "\" y=\"" << coord(legend_y)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
           "fill=\"" << s.color << "\">" << s.label << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";
}

inline void write_histogram_svg(const std::string& path,
                                const std::string& title,
                                const std::vector<double>& values,
                                int bins = 30) {
  using namespace svg_detail;
  if (values.empty()) throw InputError("histogram needs at least one value");
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  if (lo == hi) hi = lo + 1;
  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto b = static_cast<long>((v - lo) / (hi - lo) * bins);
    b = std::clamp<long>(b, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  long max_count = *std::max_element(counts.begin(), counts.end());

  Range xr{lo, hi};
  Range yr{0, static_cast<double>(max_count)};
  auto out = open_output(path);
  write_frame(out, title, xr, yr);
  double plot_w = (kWidth - kLeft - kRight) / bins;
  for (int b = 0; b < bins; ++b) {
    double h = yr.scale(static_cast<double>(counts[static_cast<std::size_t>(b)]),
                        kHeight - kBottom, kTop);
    out << "<rect x=\"" << coord(kLeft + b * plot_w) << "\" y=\"" << coord(h)
        << "\" width=\"" << coord(plot_w) << "\" height=\""
        << coord(kHeight - kBottom - h)
        << "\" fill=\"steelblue\" stroke=\"white\"/>\n";
  }
  out << "</svg>\n";
}

namespace svg_detail {

struct Column {
  std::vector<double> xs, ys;
};

// Reads (first column, named column) pairs from a headed CSV.
inline Column read_curve(const std::string& path, const std::string& y_column) {
  auto in = open_input(path);
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty file '" + path + "'", 1);
  auto header = split_csv_line(line);
  std::size_t y_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == y_column) y_idx = i;
  if (y_idx == header.size())
    throw InputError("column '" + y_column + "' not found in " + path);
  Column col;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    col.xs.push_back(parse_double_field(fields.at(0), line_no));
    col.ys.push_back(parse_double_field(fields.at(y_idx), line_no));
  }
  return col;
}

}  // namespace svg_detail

/// Renders every recognized curve pair in a run directory; returns the list
/// of SVG paths written. A reference CSV without its measured counterpart is
/// an error naming the missing file.
inline std::vector<std::string> render_run_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::string base = dir.back() == '/' ? dir : dir + "/";
  std::vector<std::string> written;

  auto exists = [&](const std::string& name) { return fs::exists(base + name); };
  auto require = [&](const std::string& name) {
    if (!exists(name))
      throw InputError("missing " + base + name + " required by this run");
  };

  auto curve_pair = [&](const std::string& trace_name,
                        const std::string& ref_name, const std::string& column,
                        bool sqrt_measured, const std::string& title,
                        const std::string& out_name) {
    auto measured = svg_detail::read_curve(base + trace_name, column);
    if (sqrt_measured)
      for (double& v : measured.ys) v = std::sqrt(v);
    auto reference = svg_detail::read_curve(base + ref_name, "predicted");
    write_line_svg(base + out_name, title,
                   {{"measured", "steelblue", false, measured.xs, measured.ys},
                    {"predicted", "firebrick", true, reference.xs, reference.ys}});
    written.push_back(base + out_name);
  };

  if (exists("bound.csv")) {
    require("trace.csv");
    curve_pair("trace.csv", "bound.csv", "loss_sq", false,
               "squared loss vs rate bound", "loss_vs_bound.svg");
  }
  if (exists("predicted_top.csv")) {
    require("trace_top.csv");
    curve_pair("trace_top.csv", "predicted_top.csv", "loss_sq", true,
               "residual norm, top-eigenvector labels", "loss_vs_predicted_top.svg");
  }
  if (exists("predicted_random.csv")) {
    require("trace_random.csv");
    curve_pair("trace_random.csv", "predicted_random.csv", "loss_sq", true,
               "residual norm, random labels", "loss_vs_predicted_random.svg");
  }
  if (exists("lambda_theta.csv")) {
    auto lam = svg_detail::read_curve(base + "lambda_theta.csv", "lambda");
    auto th = svg_detail::read_curve(base + "lambda_theta.csv", "theta");
    write_line_svg(base + "lambda_vs_n.svg", "min eigenvalue vs n",
                   {{"lambda", "steelblue", false, lam.xs, lam.ys}});
    write_line_svg(base + "theta_vs_n.svg", "theta vs n",
                   {{"theta", "steelblue", false, th.xs, th.ys}});
    written.push_back(base + "lambda_vs_n.svg");
    written.push_back(base + "theta_vs_n.svg");
  }
  if (exists("deviation_samples.csv")) {
    auto dev = svg_detail::read_curve(base + "deviation_samples.csv", "spectral_dev");
    write_histogram_svg(base + "deviation_hist.svg",
                        "spectral deviation of H(w) over weight samples",
                        dev.ys);
    written.push_back(base + "deviation_hist.svg");
  }

  if (written.empty())
    throw InputError("missing " + base +
                     "trace.csv: no renderable curves in this directory");
  return written;
}

}  // namespace overparam
