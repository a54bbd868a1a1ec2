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

#include "support/oracles.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

#include <unistd.h>

namespace sdafl::testing {

Vector CentralDifference(const std::function<double(const ParamVector&)>& f,
                         const ParamVector& p, double h) {
  Vector out(p.size());
  ParamVector q = p;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(p.size()); ++i) {
    const double orig = q.values()[i];
    q.mutable_values()[i] = orig + h;
    const double up = f(q);
    q.mutable_values()[i] = orig - h;
    const double down = f(q);
    q.mutable_values()[i] = orig;
    out[i] = (up - down) / (2 * h);
  }
  return out;
}

double RelativeError(const Vector& a, const Vector& b, double floor) {
  const double scale = std::max({a.norm(), b.norm(), floor});
  return (a - b).norm() / scale;
}

std::vector<double> NaiveSoftmax(const std::vector<double>& logits) {
  double hi = logits[0];
  for (double v : logits) hi = std::max(hi, v);
  std::vector<double> out;
  double total = 0;
  for (double v : logits) {
    out.push_back(std::exp(v - hi));
    total += out.back();
  }
  for (double& v : out) v /= total;
  return out;
}

double NaiveCrossEntropyRow(const std::vector<double>& probs,
                            const std::vector<double>& targets) {
  double loss = 0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    loss -= targets[c] * std::log(std::max(probs[c], 1e-12));
  }
  return loss;
}

double NaiveMeanCrossEntropy(const Matrix& logits, const Matrix& targets) {
  double total = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    total += NaiveCrossEntropyRow(NaiveSoftmax(RowOf(logits, r)),
                                  RowOf(targets, r));
  }
  return total / static_cast<double>(logits.rows());
}

std::optional<std::pair<int, double>> NaivePseudoLabel(
    const std::vector<double>& probs, double tau) {
  int best = 0;
  for (std::size_t c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  const double conf = probs[static_cast<std::size_t>(best)];
  if (conf > tau) return std::make_pair(best, conf);
  return std::nullopt;
}

std::vector<double> RowOf(const Matrix& m, Eigen::Index r) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(r, c);
  return out;
}

Matrix UniformMatrix(Eigen::Index rows, Eigen::Index cols, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(gen);
  }
  return m;
}

Matrix RandomOneHot(Eigen::Index rows, int classes, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> pick(0, classes - 1);
  Matrix m = Matrix::Zero(rows, classes);
  for (Eigen::Index i = 0; i < rows; ++i) m(i, pick(gen)) = 1.0;
  return m;
}

TempDir::TempDir(const std::string& prefix) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          (prefix + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace sdafl::testing
