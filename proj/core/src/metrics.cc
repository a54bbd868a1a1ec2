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

#include "sdafl/metrics.h"

#include <cmath>
#include <iomanip>
#include <limits>

#include <Eigen/Eigenvalues>

#include "sdafl/errors.h"

namespace sdafl::metrics {
namespace {

using ColMatrix = Eigen::MatrixXd;

Eigen::SelfAdjointEigenSolver<ColMatrix> Eig(const Matrix& s) {
  const ColMatrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<ColMatrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NonFiniteError("eigendecomposition did not converge");
  }
  return solver;
}

void RequireSquare(const Matrix& s, const char* what) {
  if (s.rows() != s.cols()) {
    throw InvalidArgument(std::string(what) + " is not square");
  }
}

}  // namespace

double AccuracyFromProbs(const Matrix& probs, const std::vector<int>& labels) {
  if (labels.empty()) throw InvalidArgument("accuracy of an empty test set");
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) {
    throw InvalidArgument("prediction and label counts differ");
  }
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probs.cols(); ++c) {
      if (probs(i, c) > probs(i, best)) best = c;
    }
    if (best == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double Accuracy(const models::ClassifierModel& model,
                const data::LabeledDataset& test) {
  if (test.size() == 0) throw InvalidArgument("accuracy of an empty test set");
  return AccuracyFromProbs(model.PredictProba(test.examples), test.labels);
}

FeatureStats ComputeStats(const Matrix& features) {
  if (features.rows() == 0) throw InvalidArgument("no samples for statistics");
  FeatureStats s;
  s.n = static_cast<std::size_t>(features.rows());
  s.mean = features.colwise().mean().transpose();
  const Matrix centered = features.rowwise() - s.mean.transpose();
  s.cov = (centered.transpose() * centered) / static_cast<double>(s.n);
  s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
  return s;
}

Matrix SqrtPsd(const Matrix& s) {
  RequireSquare(s, "matrix");
  const auto eig = Eig(s);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() *
         eig.eigenvectors().transpose();
}

Matrix SqrtmProduct(const Matrix& s1, const Matrix& s2) {
  RequireSquare(s1, "s1");
  RequireSquare(s2, "s2");
  if (s1.rows() != s2.rows()) throw InvalidArgument("dimension mismatch");
  const auto eig = Eig(s1);
  const Eigen::VectorXd lam = eig.eigenvalues();
  if (lam.minCoeff() <= 0) {
    throw InvalidArgument("s1 must be positive definite");
  }
  const ColMatrix& q = eig.eigenvectors();
  const ColMatrix half = q * lam.cwiseSqrt().asDiagonal() * q.transpose();
  const ColMatrix inv_half =
      q * lam.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
  const Matrix inner = half * s2 * half;
  return half * SqrtPsd(inner) * inv_half;
}

double FrechetDistance(const FeatureStats& a, const FeatureStats& b,
                       double shrinkage) {
  if (a.mean.size() != b.mean.size()) {
    throw InvalidArgument("feature dimensions differ");
  }
  const Eigen::Index d = a.mean.size();
  const Matrix eye = Matrix::Identity(d, d);
  const Matrix s1 = a.cov + shrinkage * eye;
  const Matrix s2 = b.cov + shrinkage * eye;
  const auto eig1 = Eig(s1);
  if (eig1.eigenvalues().minCoeff() <= 0) {
    throw InvalidArgument("degenerate covariance; use shrinkage > 0");
  }
  const ColMatrix& q = eig1.eigenvectors();
  const ColMatrix half =
      q * eig1.eigenvalues().cwiseSqrt().asDiagonal() * q.transpose();
  // Tr (S1 S2)^{1/2} equals Tr (S1^{1/2} S2 S1^{1/2})^{1/2}.
  const Matrix inner = half * s2 * half;
  const double tr_sqrt = Eig(inner).eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double value = mean_term + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
  if (!std::isfinite(value)) throw NonFiniteError("Frechet distance not finite");
  return std::max(value, 0.0);
}

FeatureMap RawFeatures() {
  return [](const Matrix& x) { return x; };
}

FeatureMap PenultimateFeatures(models::ClassifierModel model) {
  return [m = std::move(model)](const Matrix& x) {
    return m.net().Penultimate(x);
  };
}

double FrechetProxy(const Matrix& real, const Matrix& synth,
                    const FeatureMap& embed, double shrinkage) {
  if (real.cols() != synth.cols()) {
    throw InvalidArgument("real and synthetic feature dimensions differ");
  }
  return FrechetDistance(ComputeStats(embed(real)), ComputeStats(embed(synth)),
                         shrinkage);
}

int ModeCoverage(const Matrix& samples,
                 const std::vector<Eigen::Vector2d>& centers, double radius) {
  if (!(radius > 0)) throw InvalidArgument("radius must be positive");
  if (samples.rows() > 0 && samples.cols() != 2) {
    throw InvalidArgument("mode coverage expects 2-D samples");
  }
  const double r2 = radius * radius;
  int covered = 0;
  for (const Eigen::Vector2d& c : centers) {
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      const double dx = samples(i, 0) - c.x();
      const double dy = samples(i, 1) - c.y();
      if (dx * dx + dy * dy <= r2) {
        ++covered;
        break;
      }
    }
  }
  return covered;
}

LabelCoverage ComputeLabelCoverage(const fedcore::SyntheticStore& store) {
  LabelCoverage out;
  std::size_t labeled = 0;
  double conf = 0;
  for (const fedcore::SyntheticRecord& r : store.records) {
    if (!r.pseudo_label) continue;
    ++labeled;
    conf += r.confidence;
    ++out.histogram[*r.pseudo_label];
  }
  if (!store.records.empty()) {
    out.labeled_fraction =
        static_cast<double>(labeled) / static_cast<double>(store.records.size());
  }
  if (labeled > 0) out.mean_confidence = conf / static_cast<double>(labeled);
  return out;
}

void WriteMetricsCsv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << "round,accuracy,frechet_proxy,labeled_fraction,mean_confidence\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const MetricsRow& r : rows) {
    os << r.round << ',' << r.accuracy << ',';
    if (r.frechet_proxy) os << *r.frechet_proxy;
    os << ',' << r.labeled_fraction << ',' << r.mean_confidence << '\n';
  }
}

}  // namespace sdafl::metrics
