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
#include <complex>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "sdafl/errors.h"
#include "sdafl/rng.h"
#include "sdafl/synthetic_store.h"
#include "sdafl/toy_data.h"
#include "support/oracles.h"

namespace sdafl::metrics {
namespace {

using models::ClassifierModel;

// Class-1 logit k * (x + y - 1) on 2-D inputs.
ClassifierModel LinearModel(double k) {
  MlpSpec spec;
  spec.input_dim = 2;
  spec.output_dim = 2;
  ClassifierModel m(Mlp::Initialized(spec, 0));
  ParamVector p = m.params().ZerosLike();
  p.MutableSegmentValues("fc0.weight") << -k, -k, k, k;
  p.MutableSegmentValues("fc0.bias") << k, -k;
  m.set_params(p);
  return m;
}

data::LabeledDataset Blobs() {
  return data::TwoBlobs(100, Eigen::Vector2d(0.25, 0.25),
                        Eigen::Vector2d(0.75, 0.75), 0.05, 4);
}

FeatureStats Stats1d(double mean, double var) {
  FeatureStats s;
  s.mean = Vector::Constant(1, mean);
  s.cov = Matrix::Constant(1, 1, var);
  s.n = 100;
  return s;
}

// Random symmetric positive-definite matrix A A^T / d + 0.1 I.
Matrix RandomSpd(int d, uint64_t seed) {
  const Matrix a = testing::UniformMatrix(d, d, seed).array() - 0.5;
  return a * a.transpose() / d + 0.1 * Matrix::Identity(d, d);
}

// Tr((s1 s2)^{1/2}) from the eigenvalues of the (non-symmetric) product.
double TraceSqrtOracle(const Matrix& s1, const Matrix& s2) {
  const Eigen::MatrixXd prod = s1 * s2;
  Eigen::EigenSolver<Eigen::MatrixXd> es(prod);
  double tr = 0;
  for (Eigen::Index i = 0; i < prod.rows(); ++i) {
    tr += std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
  }
  return tr;
}

TEST(AccuracyTest, OracleAndAntiOracle) {
  const data::LabeledDataset test = Blobs();
  EXPECT_EQ(Accuracy(LinearModel(100), test), 1.0);
  EXPECT_EQ(Accuracy(LinearModel(-100), test), 0.0);
}

TEST(AccuracyTest, UniformModelPicksLowestIndex) {
  data::LabeledDataset test = data::RenderDigits(100, 1);
  ClassifierModel m = ClassifierModel::Initialized(test.feature_dim(), 10, 1, 8);
  m.set_params(m.params().ZerosLike());
  EXPECT_EQ(test.size(), 1000u);
  EXPECT_EQ(Accuracy(m, test), 0.1);
}

TEST(AccuracyTest, InvariantUnderPermutation) {
  const data::LabeledDataset test = data::RenderDigits(20, 2);
  const ClassifierModel m =
      ClassifierModel::Initialized(test.feature_dim(), 10, 3, 16);
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const data::LabeledDataset shuffled =
        test.Subset(rng.Permutation(test.size()));
    EXPECT_EQ(Accuracy(m, shuffled), Accuracy(m, test));
  }
}

TEST(AccuracyTest, EmptyTestSetThrows) {
  data::LabeledDataset empty;
  empty.num_classes = 2;
  empty.examples.resize(0, 2);
  EXPECT_THROW(Accuracy(LinearModel(1), empty), InvalidArgument);
}

TEST(AccuracyFromProbsTest, TiesGoToLowestIndex) {
  Matrix p(2, 3);
  p << 0.4, 0.4, 0.2, 0.1, 0.45, 0.45;
  EXPECT_EQ(AccuracyFromProbs(p, {0, 1}), 1.0);
  EXPECT_EQ(AccuracyFromProbs(p, {1, 2}), 0.0);
}

TEST(FrechetTest, OneDimensionalClosedForms) {
  EXPECT_NEAR(FrechetDistance(Stats1d(0, 1), Stats1d(1, 1), 1e-15), 1.0, 1e-12);
  EXPECT_NEAR(FrechetDistance(Stats1d(0, 1), Stats1d(0, 4), 1e-15), 1.0, 1e-12);
  EXPECT_NEAR(FrechetDistance(Stats1d(0, 1), Stats1d(1, 1)), 1.0, 1e-8);
}

TEST(FrechetTest, IdenticalSetsGiveZero) {
  const Matrix x = testing::UniformMatrix(200, 6, 1);
  EXPECT_NEAR(FrechetProxy(x, x, RawFeatures()), 0.0, 1e-8);
}

TEST(FrechetTest, SymmetricNonnegativeAndMatchesEigenOracle) {
  for (uint64_t trial = 0; trial < 40; ++trial) {
    const int d = 1 + static_cast<int>(trial % 16);
    FeatureStats a, b;
    a.mean = testing::UniformMatrix(d, 1, 3 * trial);
    b.mean = testing::UniformMatrix(d, 1, 3 * trial + 1);
    a.cov = RandomSpd(d, 1000 + trial);
    b.cov = RandomSpd(d, 2000 + trial);
    const double ab = FrechetDistance(a, b, 1e-12);
    EXPECT_NEAR(ab, FrechetDistance(b, a, 1e-12), 1e-10);
    EXPECT_GE(ab, 0.0);
    const double want = (a.mean - b.mean).squaredNorm() + a.cov.trace() +
                        b.cov.trace() - 2 * TraceSqrtOracle(a.cov, b.cov);
    EXPECT_NEAR(ab, want, 1e-8 * std::max(1.0, want)) << "d=" << d;
  }
}

TEST(FrechetTest, RequiresShrinkageForSingularCovariance) {
  const Matrix x = Matrix::Zero(10, 3);
  EXPECT_THROW(FrechetDistance(ComputeStats(x), ComputeStats(x), 0.0),
               InvalidArgument);
  EXPECT_NEAR(FrechetProxy(x, x, RawFeatures()), 0.0, 1e-12);
}

TEST(FrechetTest, MoreNoiseScoresWorse) {
  Rng rng(3);
  const Matrix real = testing::UniformMatrix(500, 4, 1);
  double previous = 0;
  for (double noise : {0.05, 0.2, 0.5}) {
    Matrix noisy = real;
    for (Eigen::Index i = 0; i < noisy.size(); ++i) {
      noisy.data()[i] += noise * rng.Normal();
    }
    const double d = FrechetProxy(real, noisy, RawFeatures());
    EXPECT_GT(d, previous);
    previous = d;
  }
}

TEST(SqrtTest, ProductSquaresBack) {
  for (uint64_t trial = 0; trial < 40; ++trial) {
    const int d = 1 + static_cast<int>(trial % 16);
    const Matrix s1 = RandomSpd(d, trial);
    const Matrix s2 = RandomSpd(d, trial + 500);
    const Matrix r = SqrtmProduct(s1, s2);
    const Matrix target = s1 * s2;
    EXPECT_LE((r * r - target).norm() / target.norm(), 1e-8) << "d=" << d;
  }
}

TEST(SqrtTest, PsdRootSquaresBackAndClampsRounding) {
  const Matrix s = RandomSpd(7, 4);
  const Matrix r = SqrtPsd(s);
  EXPECT_LE((r * r - s).norm() / s.norm(), 1e-10);
  Matrix nearly(2, 2);
  nearly << 1, 1, 1, 1 - 1e-17;
  EXPECT_TRUE(SqrtPsd(nearly).allFinite());
}

TEST(StatsTest, PopulationCovarianceIsSymmetricPsd) {
  const Matrix x = testing::UniformMatrix(50, 5, 8);
  const FeatureStats s = ComputeStats(x);
  EXPECT_EQ(s.n, 50u);
  EXPECT_LE((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.cov);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
  const Matrix centered = x.rowwise() - x.colwise().mean();
  EXPECT_LE((s.cov - centered.transpose() * centered / 50.0).norm(), 1e-12);
  EXPECT_THROW(ComputeStats(Matrix(0, 3)), InvalidArgument);
}

TEST(FeatureMapTest, PenultimateUsesHiddenWidth) {
  const ClassifierModel m = ClassifierModel::Initialized(6, 3, 1, 9);
  const Matrix f = PenultimateFeatures(m)(testing::UniformMatrix(4, 6, 2));
  EXPECT_EQ(f.rows(), 4);
  EXPECT_EQ(f.cols(), 9);
  EXPECT_EQ(RawFeatures()(Matrix::Ones(2, 3)), Matrix::Ones(2, 3));
}

TEST(ModeCoverageTest, Examples) {
  const std::vector<Eigen::Vector2d> centers = data::RingGeometry{}.Centers();
  Matrix at_all(8, 2);
  for (int i = 0; i < 8; ++i) at_all.row(i) = centers[static_cast<std::size_t>(i)].transpose();
  EXPECT_EQ(ModeCoverage(at_all, centers, 0.1), 8);
  EXPECT_EQ(ModeCoverage(Matrix(0, 2), centers, 0.1), 0);
  Matrix one(5, 2);
  one.rowwise() = centers[3].transpose();
  EXPECT_EQ(ModeCoverage(one, centers, 0.1), 1);
  EXPECT_THROW(ModeCoverage(one, centers, 0.0), InvalidArgument);
}

TEST(LabelCoverageTest, Examples) {
  fedcore::SyntheticStore s;
  s.num_clients = 1;
  s.samples = Matrix::Zero(4, 1);
  s.records.resize(4);
  LabelCoverage c = ComputeLabelCoverage(s);
  EXPECT_EQ(c.labeled_fraction, 0.0);
  EXPECT_TRUE(c.histogram.empty());
  EXPECT_EQ(c.mean_confidence, 0.0);

  for (auto& r : s.records) {
    r.pseudo_label = 0;
    r.confidence = 0.99;
  }
  c = ComputeLabelCoverage(s);
  EXPECT_EQ(c.labeled_fraction, 1.0);
  EXPECT_EQ(c.histogram, (std::map<int, std::size_t>{{0, 4}}));
  EXPECT_NEAR(c.mean_confidence, 0.99, 1e-15);

  s.records[1].pseudo_label.reset();
  s.records[3].pseudo_label.reset();
  EXPECT_EQ(ComputeLabelCoverage(s).labeled_fraction, 0.5);
}

TEST(LabelCoverageTest, MatchesEnumeration) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    fedcore::SyntheticStore s;
    s.num_clients = 1;
    const std::size_t n = 1 + rng.Index(80);
    s.samples = Matrix::Zero(static_cast<Eigen::Index>(n), 1);
    s.records.resize(n);
    std::map<int, std::size_t> hist;
    std::size_t labeled = 0;
    double conf = 0;
    for (auto& r : s.records) {
      r.confidence = rng.Uniform();
      if (rng.Uniform() < 0.6) {
        r.pseudo_label = static_cast<int>(rng.Index(5));
        ++hist[*r.pseudo_label];
        ++labeled;
        conf += r.confidence;
      }
    }
    const LabelCoverage c = ComputeLabelCoverage(s);
    EXPECT_DOUBLE_EQ(c.labeled_fraction, static_cast<double>(labeled) / n);
    EXPECT_EQ(c.histogram, hist);
    EXPECT_NEAR(c.mean_confidence, labeled ? conf / labeled : 0.0, 1e-12);
  }
}

TEST(MetricsCsvTest, HeaderAndEmptyProxy) {
  std::ostringstream os;
  WriteMetricsCsv(os, {{0, 0.5, std::nullopt, 0.25, 0.875}, {1, 0.75, 2.5, 1, 1}});
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "round,accuracy,frechet_proxy,labeled_fraction,mean_confidence");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0.5,,0.25,0.875");
  std::getline(in, line);
  EXPECT_EQ(line, "1,0.75,2.5,1,1");
}

}  // namespace
}  // namespace sdafl::metrics
