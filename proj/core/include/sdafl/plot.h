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

#ifndef SDAFL_PLOT_H_
#define SDAFL_PLOT_H_

#include <filesystem>
#include <string>
#include <vector>

namespace sdafl::harness {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Bar {
  std::string label;
  double value = 0.0;
};

// Self-contained SVG documents. Output depends only on the arguments.
std::string LinePlotSvg(const std::vector<Series>& series,
                        const std::string& title, const std::string& x_label,
                        const std::string& y_label);
std::string BarChartSvg(const std::vector<Bar>& bars, const std::string& title,
                        const std::string& y_label);

// Writes accuracy.svg (one curve per run, legend = run id) and, when any run
// recorded a Frechet proxy, fid_vs_epsilon.svg. Returns the files written.
// Throws IoError for a missing directory and InvalidArgument for empty logs.
std::vector<std::filesystem::path> PlotRuns(
    const std::vector<std::filesystem::path>& run_dirs,
    const std::filesystem::path& out_dir);

}  // namespace sdafl::harness

#endif  // SDAFL_PLOT_H_
