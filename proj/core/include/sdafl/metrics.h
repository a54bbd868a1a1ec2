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

#ifndef SDAFL_METRICS_H_
#define SDAFL_METRICS_H_

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "sdafl/data.h"
#include "sdafl/models.h"
#include "sdafl/synthetic_store.h"
#include "sdafl/tensor.h"

namespace sdafl::metrics {

// Ridge added to both covariances before the matrix square root.
inline constexpr double kCovarianceShrinkage = 1e-6;

// Fraction of rows whose argmax prediction equals the label; lowest index
// wins ties. Throws InvalidArgument on an empty test set.
double Accuracy(const models::ClassifierModel& model,
                const data::LabeledDataset& test);
double AccuracyFromProbs(const Matrix& probs, const std::vector<int>& labels);

struct FeatureStats {
  Vector mean;
  // Population covariance (divides by n).
  Matrix cov;
  std::size_t n = 0;
};

// Throws InvalidArgument when `features` has no rows.
FeatureStats ComputeStats(const Matrix& features);

// Principal square root of a symmetric positive-semidefinite matrix.
// Negative eigenvalues from rounding are clamped to zero.
Matrix SqrtPsd(const Matrix& s);

// (s1 s2)^{1/2} for symmetric PSD s1, s2, computed as
// s1^{1/2} (s1^{1/2} s2 s1^{1/2})^{1/2} s1^{-1/2}. s1 must be positive
// definite.
Matrix SqrtmProduct(const Matrix& s1, const Matrix& s2);

// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}) with `shrinkage` * I added
// to both covariances. Throws InvalidArgument if shrinkage <= 0 and either
// covariance is singular.
double FrechetDistance(const FeatureStats& a, const FeatureStats& b,
                       double shrinkage = kCovarianceShrinkage);

// Maps raw examples to the feature space used for the Frechet proxy.
using FeatureMap = std::function<Matrix(const Matrix&)>;

FeatureMap RawFeatures();
// Hidden-layer activations of a frozen classifier.
FeatureMap PenultimateFeatures(models::ClassifierModel model);

double FrechetProxy(const Matrix& real, const Matrix& synth,
                    const FeatureMap& embed,
                    double shrinkage = kCovarianceShrinkage);

// Number of centers with at least one sample within `radius` (Euclidean).
int ModeCoverage(const Matrix& samples,
                 const std::vector<Eigen::Vector2d>& centers, double radius);

struct LabelCoverage {
  double labeled_fraction = 0.0;
  std::map<int, std::size_t> histogram;
  // Mean confidence over labeled records; 0 when none are labeled.
  double mean_confidence = 0.0;
};

LabelCoverage ComputeLabelCoverage(const fedcore::SyntheticStore& store);

struct MetricsRow {
  int round = 0;
  double accuracy = 0.0;
  std::optional<double> frechet_proxy;
  double labeled_fraction = 0.0;
  double mean_confidence = 0.0;
};

// Header "round,accuracy,frechet_proxy,labeled_fraction,mean_confidence";
// a missing proxy is written as an empty field.
void WriteMetricsCsv(std::ostream& os, const std::vector<MetricsRow>& rows);

}  // namespace sdafl::metrics

#endif  // SDAFL_METRICS_H_
