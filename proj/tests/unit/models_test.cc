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

#include "sdafl/models.h"

#include <cmath>
#include <sstream>
#include <vector>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "sdafl/checkpoint.h"
#include "sdafl/errors.h"
#include "sdafl/mlp.h"
#include "sdafl/param_vector.h"
#include "support/oracles.h"

namespace sdafl::models {
namespace {

using ::testing::HasSubstr;
using sdafl::testing::CentralDifference;
using sdafl::testing::RelativeError;

ClassifierModel LinearClassifier(int in, int classes) {
  MlpSpec spec;
  spec.input_dim = in;
  spec.output_dim = classes;
  return ClassifierModel(Mlp::Initialized(spec, 1));
}

ParamVector Zeros(const ClassifierModel& m) { return m.params().ZerosLike(); }

TEST(PredictProbaTest, ZeroWeightsGiveUniformRows) {
  ClassifierModel m = ClassifierModel::Initialized(6, 4, 3, 8);
  m.set_params(Zeros(m));
  const Matrix p = m.PredictProba(testing::UniformMatrix(3, 6, 1));
  EXPECT_TRUE(p.isApproxToConstant(0.25, 1e-15));
}

TEST(PredictProbaTest, HandComputedSoftmax) {
  ClassifierModel m = LinearClassifier(1, 2);
  ParamVector p = Zeros(m);
  p.MutableSegmentValues("fc0.bias")[0] = std::log(3.0);
  m.set_params(p);
  const Matrix probs = m.PredictProba(Matrix::Constant(1, 1, 0.7));
  EXPECT_NEAR(probs(0, 0), 0.75, 1e-15);
  EXPECT_NEAR(probs(0, 1), 0.25, 1e-15);
}

TEST(PredictProbaTest, RowsAreDistributions) {
  const ClassifierModel m = ClassifierModel::Initialized(5, 10, 9, 16);
  const Matrix p = m.PredictProba(testing::UniformMatrix(5, 5, 2));
  ASSERT_EQ(p.rows(), 5);
  ASSERT_EQ(p.cols(), 10);
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-6);
    EXPECT_GE(p.row(i).minCoeff(), 0.0);
  }
}

TEST(PredictProbaTest, ShapeMismatchAndOverflow) {
  ClassifierModel m = ClassifierModel::Initialized(5, 3, 1, 4);
  EXPECT_THROW(m.PredictProba(Matrix::Zero(2, 4)), InvalidArgument);
  ParamVector p = m.params();
  p.mutable_values().setConstant(1e300);
  m.set_params(p);
  EXPECT_THROW(m.PredictProba(Matrix::Ones(1, 5)), NonFiniteError);
}

TEST(SoftmaxTest, ExtremeLogitsStayNormalized) {
  Matrix logits(2, 3);
  logits << 1000, -1000, 0, -5e5, -5e5, -5e5;
  const Matrix p = Softmax(logits);
  for (Eigen::Index i = 0; i < 2; ++i) {
    EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
    EXPECT_TRUE(p.row(i).allFinite());
  }
  EXPECT_NEAR(p(1, 0), 1.0 / 3, 1e-15);
}

TEST(CrossEntropyTest, HandValues) {
  Matrix p(1, 3);
  p << 1, 0, 0;
  EXPECT_NEAR(CrossEntropy(p, std::vector<int>{0}), 0.0, 1e-15);
  // The clamp keeps a zero-probability target finite.
  EXPECT_NEAR(CrossEntropy(p, std::vector<int>{1}), -std::log(kLogClamp), 1e-9);

  const Matrix uniform = Matrix::Constant(3, 4, 0.25);
  EXPECT_NEAR(CrossEntropy(uniform, std::vector<int>{0, 3, 2}), std::log(4.0),
              1e-15);

  Matrix half(1, 2);
  half << 0.5, 0.5;
  EXPECT_NEAR(CrossEntropy(half, half), std::log(2.0), 1e-15);
}

TEST(CrossEntropyTest, SoftTargetsMatchLabelOverload) {
  const Matrix probs = Softmax(testing::UniformMatrix(6, 4, 5) * 3);
  const std::vector<int> labels = {0, 1, 2, 3, 1, 0};
  Matrix onehot = Matrix::Zero(6, 4);
  for (int i = 0; i < 6; ++i) onehot(i, labels[static_cast<std::size_t>(i)]) = 1;
  EXPECT_DOUBLE_EQ(CrossEntropy(probs, labels), CrossEntropy(probs, onehot));
}

TEST(GradTest, QuadraticAndConstant) {
  const ParamVector p = ParamVector::FromValues(Vector{{1.0, 2.0}});
  const LossFn half_norm = [](const ParamVector& w, ParamVector* g) {
    if (g) g->mutable_values() += w.values();
    return 0.5 * w.values().squaredNorm();
  };
  const ParamVector g = Grad(half_norm, p);
  EXPECT_DOUBLE_EQ(g[0], 1.0);
  EXPECT_DOUBLE_EQ(g[1], 2.0);

  const LossFn constant = [](const ParamVector&, ParamVector*) { return 3.0; };
  EXPECT_TRUE(Grad(constant, p).values().isZero());
}

TEST(GradTest, NonFiniteLossOrGradientThrows) {
  const ParamVector p = ParamVector::FromValues(Vector{{1.0}});
  const LossFn nan_loss = [](const ParamVector&, ParamVector*) { return NAN; };
  EXPECT_THROW(Grad(nan_loss, p), NonFiniteError);
  const LossFn inf_grad = [](const ParamVector&, ParamVector* g) {
    if (g) g->mutable_values()[0] = INFINITY;
    return 1.0;
  };
  EXPECT_THROW(Grad(inf_grad, p), NonFiniteError);
}

TEST(GradTest, ClassifierCrossEntropyMatchesFiniteDifferences) {
  const Matrix x = testing::UniformMatrix(8, 5, 11);
  const Matrix y = testing::RandomOneHot(8, 3, 12);
  for (uint64_t point = 0; point < 20; ++point) {
    ClassifierModel m = ClassifierModel::Initialized(5, 3, 100 + point, 7);
    const LossFn loss = [&](const ParamVector& w, ParamVector* g) {
      return m.WithParams(w).SoftTargetLoss(x, y, 1.0, g);
    };
    const Vector fd = CentralDifference(
        [&](const ParamVector& w) { return loss(w, nullptr); }, m.params());
    EXPECT_LE(RelativeError(Grad(loss, m.params()).values(), fd), 1e-4)
        << "point " << point;
  }
}

// Every architecture used in experiments: checks Backward against finite
// differences of a random linear functional of the output.
struct ArchCase {
  const char* name;
  MlpSpec spec;
};

class MlpGradientTest : public ::testing::TestWithParam<ArchCase> {};

TEST_P(MlpGradientTest, BackwardMatchesFiniteDifferences) {
  const MlpSpec& spec = GetParam().spec;
  const Matrix x = testing::UniformMatrix(6, spec.input_dim, 3);
  const Matrix r = testing::UniformMatrix(6, spec.output_dim, 4).array() - 0.5;
  for (uint64_t point = 0; point < 20; ++point) {
    const Mlp base = Mlp::Initialized(spec, 500 + point);
    auto f = [&](const ParamVector& w) {
      Mlp net = base;
      net.set_params(w);
      return (net.Forward(x).array() * r.array()).sum();
    };
    MlpCache cache;
    base.Forward(x, &cache);
    ParamVector g = base.params().ZerosLike();
    Matrix d_in;
    base.Backward(cache, r, &g, &d_in);
    EXPECT_LE(RelativeError(g.values(), CentralDifference(f, base.params())),
              1e-4)
        << GetParam().name << " point " << point;

    // Input gradient too.
    Vector fd_in(x.size());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        Matrix up = x, down = x;
        up(i, j) += 1e-5;
        down(i, j) -= 1e-5;
        fd_in[i * x.cols() + j] =
            ((base.Forward(up).array() * r.array()).sum() -
             (base.Forward(down).array() * r.array()).sum()) /
            2e-5;
      }
    }
    const Vector analytic = Eigen::Map<const Vector>(d_in.data(), d_in.size());
    EXPECT_LE(RelativeError(analytic, fd_in), 1e-4) << GetParam().name;
  }
}

INSTANTIATE_TEST_SUITE_P(
    Architectures, MlpGradientTest,
    ::testing::Values(
        ArchCase{"classifier", ClassifierModel::DefaultSpec(12, 4, 9)},
        ArchCase{"generator", GeneratorModel::DefaultSpec(4, 0, 6, 8)},
        ArchCase{"conditional_generator",
                 GeneratorModel::DefaultSpec(4, 3, 6, 8)},
        ArchCase{"critic", CriticModel::DefaultSpec(6, 0, 8)},
        ArchCase{"ac_critic", CriticModel::DefaultSpec(6, 3, 8)},
        ArchCase{"tanh", MlpSpec{5, {7, 4}, 2, Activation::kTanh,
                                 Activation::kIdentity, 0.2}}),
    [](const auto& info) { return std::string(info.param.name); });

TEST(ArchitectureTest, OutputContracts) {
  const GeneratorModel g{Mlp::Initialized(GeneratorModel::DefaultSpec(4, 0, 9, 8), 2),
                         4, 0};
  const Matrix out = g.Generate(testing::UniformMatrix(20, 4, 1).array() * 8 - 4);
  EXPECT_EQ(out.cols(), 9);
  EXPECT_GE(out.minCoeff(), 0.0);
  EXPECT_LE(out.maxCoeff(), 1.0);

  const MlpSpec critic = CriticModel::DefaultSpec(9, 0, 8);
  EXPECT_EQ(critic.output_dim, 1);
  EXPECT_EQ(critic.output_activation, Activation::kIdentity);
  EXPECT_EQ(CriticModel::DefaultSpec(9, 3, 8).output_dim, 4);
}

TEST(InitTest, GlorotBoundsZeroBiasesAndDeterminism) {
  const MlpSpec spec = ClassifierModel::DefaultSpec(20, 10, 30);
  const Mlp a = Mlp::Initialized(spec, 8);
  for (int l = 0; l < spec.num_layers(); ++l) {
    const double bound = std::sqrt(6.0 / (spec.width(l) + spec.width(l + 1)));
    EXPECT_LE(a.Weight(l).cwiseAbs().maxCoeff(), bound);
    EXPECT_GT(a.Weight(l).cwiseAbs().maxCoeff(), 0.5 * bound);
    EXPECT_TRUE(a.Bias(l).isZero());
  }
  EXPECT_EQ(Mlp::Initialized(spec, 8).params(), a.params());
  EXPECT_FALSE(Mlp::Initialized(spec, 9).params() == a.params());
}

TEST(ParamRoundTripTest, SetParamsOfOwnParamsIsBitIdentical) {
  ClassifierModel m = ClassifierModel::Initialized(7, 3, 4, 5);
  const Matrix x = testing::UniformMatrix(4, 7, 6);
  const Matrix before = m.PredictProba(x);
  m.set_params(m.params());
  EXPECT_EQ(m.PredictProba(x), before);
}

TEST(ParamVectorTest, LayoutMismatchNamesSegment) {
  ClassifierModel m = ClassifierModel::Initialized(7, 3, 4, 5);
  const ClassifierModel wider = ClassifierModel::Initialized(7, 3, 4, 6);
  try {
    m.set_params(wider.params());
    FAIL() << "expected a layout error";
  } catch (const InvalidArgument& e) {
    EXPECT_THAT(e.what(), HasSubstr("fc0.weight"));
  }
}

TEST(ParamVectorTest, SegmentsCoverValues) {
  const Mlp net = Mlp::Initialized(ClassifierModel::DefaultSpec(4, 2, 3), 1);
  std::size_t total = 0;
  for (const Segment& s : net.params().layout()) {
    EXPECT_EQ(s.offset, total);
    total += s.length;
  }
  EXPECT_EQ(total, net.params().size());
  EXPECT_EQ(total, 4u * 3 + 3 + 3 * 2 + 2);
}

TEST(SgdStepTest, Definition) {
  const ParamVector p = ParamVector::FromValues(Vector::Zero(2));
  const ParamVector g = ParamVector::FromValues(Vector::Ones(2));
  const ParamVector q = SgdStep(p, g, 0.03);
  EXPECT_DOUBLE_EQ(q[0], -0.03);
  EXPECT_DOUBLE_EQ(q[1], -0.03);
  EXPECT_EQ(SgdStep(p, g, 0.0), p);
  EXPECT_DOUBLE_EQ(SgdStep(q, g, 0.03)[0], -0.06);
  EXPECT_THROW(SgdStep(p, g, -1.0), InvalidArgument);
  EXPECT_THROW(SgdStep(p, ParamVector::FromValues(Vector::Ones(3)), 0.1),
               InvalidArgument);
}

TEST(SgdStepTest, LinearInGradientAndStepSize) {
  const ParamVector p = ParamVector::FromValues(testing::UniformMatrix(1, 9, 1).transpose());
  const ParamVector g1 = ParamVector::FromValues(testing::UniformMatrix(1, 9, 2).transpose());
  const ParamVector g2 = ParamVector::FromValues(testing::UniformMatrix(1, 9, 3).transpose());
  ParamVector sum = g1;
  sum.mutable_values() += g2.values();
  const Vector lhs = SgdStep(p, sum, 0.1).values() - p.values();
  const Vector rhs = (SgdStep(p, g1, 0.1).values() - p.values()) +
                     (SgdStep(p, g2, 0.1).values() - p.values());
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-15);
  const Vector twice = SgdStep(p, g1, 0.2).values() - p.values();
  const Vector once = SgdStep(p, g1, 0.1).values() - p.values();
  EXPECT_LE((twice - 2 * once).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AdamTest, FirstStepMovesByLearningRateAgainstGradientSign) {
  AdamState adam;
  adam.learning_rate = 0.01;
  ParamVector p = ParamVector::FromValues(Vector::Zero(3));
  const ParamVector g = ParamVector::FromValues(Vector{{2.0, -0.5, 0.0}});
  adam.Step(p, g);
  EXPECT_NEAR(p[0], -0.01, 1e-9);
  EXPECT_NEAR(p[1], 0.01, 1e-9);
  EXPECT_DOUBLE_EQ(p[2], 0.0);
}

TEST(CheckpointTest, BitExactRoundTrip) {
  const Mlp net = Mlp::Initialized(ClassifierModel::DefaultSpec(5, 3, 4), 3);
  std::stringstream ss;
  WriteCheckpoint(ss, net.params());
  const ParamVector back = ReadCheckpoint(ss);
  EXPECT_EQ(back, net.params());
  EXPECT_TRUE(back.SameLayout(net.params()));
}

TEST(CheckpointTest, RejectsCorruptInput) {
  std::stringstream bad("NOTACKPT");
  EXPECT_THROW(ReadCheckpoint(bad), IoError);
  const Mlp net = Mlp::Initialized(ClassifierModel::DefaultSpec(5, 3, 4), 3);
  std::stringstream ss;
  WriteCheckpoint(ss, net.params());
  std::string bytes = ss.str();
  bytes.resize(bytes.size() - 5);
  std::stringstream truncated(bytes);
  EXPECT_THROW(ReadCheckpoint(truncated), IoError);
}

}  // namespace
}  // namespace sdafl::models
