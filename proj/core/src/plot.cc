// Copyright 2026 The sdafl-sim Authors
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

#include "sdafl/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sdafl/errors.h"
#include "sdafl/run_dir.h"

namespace sdafl::harness {
namespace {

namespace fs = std::filesystem;

constexpr double kWidth = 720;
constexpr double kHeight = 440;
constexpr double kLeft = 70;
constexpr double kRight = 200;
constexpr double kTop = 40;
constexpr double kBottom = 60;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                    "#bcbd22", "#17becf"};

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string Escape(const std::string& s) {
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

struct Range {
  double lo;
  double hi;
};

Range Pad(double lo, double hi) {
  if (!(hi > lo)) {
    const double d = std::max(std::abs(lo) * 0.1, 0.5);
    return {lo - d, hi + d};
  }
  return {lo, hi};
}

void Header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
     << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << Fmt(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
     << "font-size=\"15\">" << Escape(title) << "</text>\n";
}

void Axes(std::ostringstream& os, Range y, const std::string& y_label) {
  const double x0 = kLeft, x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom, y1 = kTop;
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1
     << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0
     << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 4.0;
    const double py = y0 - (y0 - y1) * i / 4.0;
    os << "<text x=\"" << Fmt(x0 - 6) << "\" y=\"" << Fmt(py + 4)
       << "\" text-anchor=\"end\">" << Fmt(v) << "</text>\n";
  }
  os << "<text x=\"16\" y=\"" << Fmt((y0 + y1) / 2)
     << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << Fmt((y0 + y1) / 2) << ")\">" << Escape(y_label) << "</text>\n";
}

}  // namespace

std::string LinePlotSvg(const std::vector<Series>& series,
                        const std::string& title, const std::string& x_label,
                        const std::string& y_label) {
  if (series.empty()) throw InvalidArgument("no series to plot");
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty()) {
      throw InvalidArgument("series '" + s.label + "' is empty or ragged");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  const Range xr = Pad(xmin, xmax);
  const Range yr = Pad(ymin, ymax);
  const double x0 = kLeft, x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom, y1 = kTop;
  auto px = [&](double v) { return x0 + (v - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); };
  auto py = [&](double v) { return y0 - (v - yr.lo) / (yr.hi - yr.lo) * (y0 - y1); };

  std::ostringstream os;
  Header(os, title);
  Axes(os, yr, y_label);
  for (int i = 0; i <= 4; ++i) {
    const double v = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    os << "<text x=\"" << Fmt(px(v)) << "\" y=\"" << Fmt(y0 + 18)
       << "\" text-anchor=\"middle\">" << Fmt(v) << "</text>\n";
  }
  os << "<text x=\"" << Fmt((x0 + x1) / 2) << "\" y=\"" << Fmt(kHeight - 16)
     << "\" text-anchor=\"middle\">" << Escape(x_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << (i ? " " : "") << Fmt(px(s.x[i])) << ',' << Fmt(py(s.y[i]));
    }
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << "<circle cx=\"" << Fmt(px(s.x[i])) << "\" cy=\"" << Fmt(py(s.y[i]))
         << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << Fmt(x1 + 12) << "\" y1=\"" << Fmt(ly) << "\" x2=\""
       << Fmt(x1 + 32) << "\" y2=\"" << Fmt(ly) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << Fmt(x1 + 38) << "\" y=\"" << Fmt(ly + 4) << "\">"
       << Escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string BarChartSvg(const std::vector<Bar>& bars, const std::string& title,
                        const std::string& y_label) {
  if (bars.empty()) throw InvalidArgument("no bars to plot");
  double ymax = 0;
  for (const Bar& b : bars) ymax = std::max(ymax, b.value);
  const Range yr = Pad(0.0, ymax);
  const double x0 = kLeft, x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom, y1 = kTop;
  const double slot = (x1 - x0) / static_cast<double>(bars.size());
  std::ostringstream os;
  Header(os, title);
  Axes(os, yr, y_label);
  for (std::size_t k = 0; k < bars.size(); ++k) {
    const double h = (bars[k].value - yr.lo) / (yr.hi - yr.lo) * (y0 - y1);
    const double left = x0 + slot * (static_cast<double>(k) + 0.15);
    os << "<rect x=\"" << Fmt(left) << "\" y=\"" << Fmt(y0 - h) << "\" width=\""
       << Fmt(slot * 0.7) << "\" height=\"" << Fmt(h) << "\" fill=\""
       << kPalette[k % std::size(kPalette)] << "\"/>\n"
       << "<text x=\"" << Fmt(left + slot * 0.35) << "\" y=\"" << Fmt(y0 + 18)
       << "\" text-anchor=\"middle\">" << Escape(bars[k].label) << "</text>\n"
       << "<text x=\"" << Fmt(left + slot * 0.35) << "\" y=\""
       << Fmt(y0 - h - 4) << "\" text-anchor=\"middle\">"
       << Fmt(bars[k].value) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<fs::path> PlotRuns(const std::vector<fs::path>& run_dirs,
                               const fs::path& out_dir) {
  if (run_dirs.empty()) throw InvalidArgument("no run directories given");
  std::vector<Series> curves;
  std::vector<std::pair<double, Bar>> bars;
  for (const fs::path& dir : run_dirs) {
    if (!fs::is_directory(dir)) throw IoError("no such run directory: " + dir.string());
    const fs::path rounds = dir / "rounds.jsonl";
    if (!fs::exists(rounds)) throw IoError("missing " + rounds.string());
    const auto logs = ReadRoundLogs(rounds);
    if (logs.empty()) throw InvalidArgument("empty round log in " + dir.string());
    Series s;
    const fs::path manifest = dir / "manifest.json";
    s.label = fs::exists(manifest) ? ReadManifest(manifest).run_id
                                   : dir.filename().string();
    for (const auto& log : logs) {
      s.x.push_back(log.round);
      s.y.push_back(100.0 * log.accuracy);
    }
    curves.push_back(std::move(s));

    const fs::path summary_path = dir / "summary.json";
    if (!fs::exists(summary_path)) continue;
    std::ifstream in(summary_path);
    nlohmann::json summary;
    try {
      summary = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("corrupt " + summary_path.string() + ": " + e.what());
    }
    if (!summary.contains("frechet_proxy") || summary["frechet_proxy"].is_null()) {
      continue;
    }
    const bool dp = summary.contains("dp_epsilon") && !summary["dp_epsilon"].is_null();
    const double eps = dp ? summary["dp_epsilon"].get<double>() : INFINITY;
    char label[48];
    if (dp) {
      std::snprintf(label, sizeof label, "eps=%g", eps);
    } else {
      std::snprintf(label, sizeof label, "no DP");
    }
    bars.push_back({eps, {label, summary["frechet_proxy"].get<double>()}});
  }
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  const fs::path acc = out_dir / "accuracy.svg";
  std::ofstream(acc) << LinePlotSvg(curves, "Test accuracy", "round",
                                    "accuracy (%)");
  written.push_back(acc);
  if (!bars.empty()) {
    std::stable_sort(bars.begin(), bars.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Bar> ordered;
    for (auto& b : bars) ordered.push_back(std::move(b.second));
    const fs::path fid = out_dir / "fid_vs_epsilon.svg";
    std::ofstream(fid) << BarChartSvg(ordered, "Frechet proxy by privacy budget",
                                      "Frechet proxy");
    written.push_back(fid);
  }
  return written;
}

}  // namespace sdafl::harness
