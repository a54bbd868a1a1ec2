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

#include "sdafl/data.h"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "sdafl/errors.h"
#include "sdafl/toy_data.h"
#include "support/oracles.h"

namespace sdafl::data {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;
using ::testing::SizeIs;

// Dataset with `per_class` rows per class; row i stores i in feature 0 so
// rows can be traced through a partition.
LabeledDataset Tagged(int classes, int per_class) {
  LabeledDataset ds;
  ds.num_classes = classes;
  const int n = classes * per_class;
  ds.examples = Matrix::Zero(n, 2);
  for (int i = 0; i < n; ++i) {
    ds.examples(i, 0) = static_cast<double>(i) / n;
    ds.examples(i, 1) = 0.5;
    ds.labels.push_back(i % classes);
  }
  ds.feature_shape = {2};
  return ds;
}

std::multiset<std::pair<double, int>> Rows(const LabeledDataset& ds) {
  std::multiset<std::pair<double, int>> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.insert({ds.examples(static_cast<Eigen::Index>(i), 0), ds.labels[i]});
  }
  return out;
}

void WriteFile(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

void WriteBigEndian(std::ofstream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

TEST(LoadDatasetTest, ParsesSmallCsv) {
  testing::TempDir dir("data");
  const auto path = dir.path() / "tiny.csv";
  WriteFile(path, "f0,f1,label\n0,0.5,0\n1,0.25,1\n0.5,0.5,0\n0.1,0.9,1\n");
  const LabeledDataset ds = LoadDataset(path, DatasetFormat::kCsv);
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.num_classes, 2);
  EXPECT_EQ(ds.feature_dim(), 2);
  EXPECT_DOUBLE_EQ(ds.examples(1, 1), 0.25);
  EXPECT_THAT(ds.labels, ElementsAre(0, 1, 0, 1));
}

TEST(LoadDatasetTest, RescalesPixelCsv) {
  testing::TempDir dir("data");
  const auto path = dir.path() / "pixels.csv";
  WriteFile(path, "f0,f1,label\n255,0,0\n51,102,1\n");
  const LabeledDataset ds = LoadDataset(path, DatasetFormat::kCsv);
  EXPECT_DOUBLE_EQ(ds.examples(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(ds.examples(1, 1), 0.4);
}

TEST(LoadDatasetTest, RejectsLabelAboveDeclaredClasses) {
  testing::TempDir dir("data");
  const auto path = dir.path() / "bad.csv";
  WriteFile(path, "f0,label\n0.5,0\n0.5,3\n");
  LoadOptions opts;
  opts.num_classes = 3;
  EXPECT_THROW(LoadDataset(path, DatasetFormat::kCsv, opts), InvalidArgument);
}

TEST(LoadDatasetTest, RejectsMissingFileAndBadHeader) {
  testing::TempDir dir("data");
  EXPECT_THROW(LoadDataset(dir.path() / "nope.csv", DatasetFormat::kCsv),
               IoError);
  const auto path = dir.path() / "hdr.csv";
  WriteFile(path, "a,b,label\n0,0,0\n");
  EXPECT_THROW(LoadDataset(path, DatasetFormat::kCsv), IoError);
}

TEST(LoadDatasetTest, UnknownFormatTag) {
  EXPECT_THROW(ParseDatasetFormat("png"), InvalidArgument);
  EXPECT_EQ(ParseDatasetFormat("idx"), DatasetFormat::kIdx);
  EXPECT_EQ(ParseDatasetFormat("csv"), DatasetFormat::kCsv);
}

TEST(LoadDatasetTest, ReadsIdxImagesScaledToUnitRange) {
  testing::TempDir dir("data");
  const auto images = dir.path() / "train-images-idx3-ubyte";
  const auto labels = dir.path() / "train-labels-idx1-ubyte";
  {
    std::ofstream out(images, std::ios::binary);
    WriteBigEndian(out, 0x00000803);
    WriteBigEndian(out, 100);
    WriteBigEndian(out, 28);
    WriteBigEndian(out, 28);
    for (int i = 0; i < 100 * 28 * 28; ++i) out.put(static_cast<char>(i % 256));
  }
  {
    std::ofstream out(labels, std::ios::binary);
    WriteBigEndian(out, 0x00000801);
    WriteBigEndian(out, 100);
    for (int i = 0; i < 100; ++i) out.put(static_cast<char>(i % 10));
  }
  const LabeledDataset ds = LoadDataset(images, DatasetFormat::kIdx);
  EXPECT_EQ(ds.size(), 100u);
  EXPECT_THAT(ds.feature_shape, ElementsAre(28, 28));
  EXPECT_EQ(ds.feature_dim(), 28 * 28);
  EXPECT_GE(ds.examples.minCoeff(), 0.0);
  EXPECT_LE(ds.examples.maxCoeff(), 1.0);
  EXPECT_DOUBLE_EQ(ds.examples(0, 255), 1.0);
  EXPECT_EQ(ds.num_classes, 10);
}

TEST(LoadDatasetTest, CsvAndIdxRoundTrip) {
  testing::TempDir dir("data");
  LabeledDataset ds = RenderDigits(3, 5);
  SaveCsv(ds, dir.path() / "d.csv");
  LoadOptions opts;
  opts.num_classes = 10;
  const LabeledDataset csv =
      LoadDataset(dir.path() / "d.csv", DatasetFormat::kCsv, opts);
  EXPECT_EQ(csv.labels, ds.labels);
  EXPECT_EQ(csv.examples, ds.examples);

  SaveIdx(ds, dir.path() / "images", dir.path() / "labels");
  opts.labels_path = dir.path() / "labels";
  const LabeledDataset idx =
      LoadDataset(dir.path() / "images", DatasetFormat::kIdx, opts);
  EXPECT_EQ(idx.labels, ds.labels);
  EXPECT_LE((idx.examples - ds.examples).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-12);
}

TEST(LabeledDatasetTest, ValidateCatchesInvariantViolations) {
  LabeledDataset ds = Tagged(2, 2);
  EXPECT_NO_THROW(ds.Validate());
  ds.examples(0, 0) = 1.5;
  EXPECT_THROW(ds.Validate(), InvalidArgument);
  ds = Tagged(2, 2);
  ds.labels.pop_back();
  EXPECT_THROW(ds.Validate(), InvalidArgument);
  ds = Tagged(2, 2);
  ds.labels[0] = 2;
  EXPECT_THROW(ds.Validate(), InvalidArgument);
}

TEST(ContentHashTest, SensitiveToLabelsAndValues) {
  LabeledDataset a = Tagged(2, 3);
  LabeledDataset b = a;
  EXPECT_EQ(ContentHash(a), ContentHash(b));
  b.labels[0] = 1;
  EXPECT_NE(ContentHash(a), ContentHash(b));
  b = a;
  b.examples(2, 1) = 0.25;
  EXPECT_NE(ContentHash(a), ContentHash(b));
}

TEST(PartitionTest, OneClassPerClient) {
  const LabeledDataset ds = Tagged(10, 100);
  const auto clients = PartitionNonIid(ds, {10, 1, 42});
  ASSERT_THAT(clients, SizeIs(10));
  std::set<int> seen;
  for (const ClientData& c : clients) {
    EXPECT_EQ(c.labeled.size(), 100u);
    ASSERT_THAT(c.DistinctClasses(), SizeIs(1));
    seen.insert(c.DistinctClasses()[0]);
  }
  EXPECT_THAT(seen, SizeIs(10));
}

TEST(PartitionTest, TwoShardsPerClientConserveTheMultiset) {
  const LabeledDataset ds = Tagged(10, 200);
  const auto clients = PartitionNonIid(ds, {10, 2, 7});
  std::multiset<std::pair<double, int>> merged;
  for (const ClientData& c : clients) {
    EXPECT_THAT(c.shard_ids, SizeIs(2));
    EXPECT_EQ(c.labeled.size(), 200u);
    EXPECT_LE(c.DistinctClasses().size(), 2u);
    const auto rows = Rows(c.labeled);
    merged.insert(rows.begin(), rows.end());
  }
  EXPECT_EQ(merged, Rows(ds));
}

TEST(PartitionTest, SameSeedSameOutput) {
  const LabeledDataset ds = Tagged(10, 50);
  const auto a = PartitionNonIid(ds, {5, 2, 3});
  const auto b = PartitionNonIid(ds, {5, 2, 3});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].source_indices, b[k].source_indices);
    EXPECT_EQ(a[k].shard_ids, b[k].shard_ids);
  }
  const auto c = PartitionNonIid(ds, {5, 2, 4});
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    differs |= a[k].source_indices != c[k].source_indices;
  }
  EXPECT_TRUE(differs);
}

TEST(PartitionTest, InfeasibleSpecs) {
  const LabeledDataset ds = Tagged(4, 5);
  EXPECT_THROW(PartitionNonIid(ds, {2, 5, 0}), InvalidArgument);
  // 3 shards cannot hold 4 classes without dropping one.
  EXPECT_THROW(PartitionNonIid(ds, {3, 1, 0}), InvalidArgument);
  // 4 classes x 5 examples cannot fill 40 shards.
  EXPECT_THROW(PartitionNonIid(ds, {20, 2, 0}), InvalidArgument);
  EXPECT_THROW(PartitionNonIid(ds, {0, 1, 0}), InvalidArgument);
}

// Property: over random specs, infeasible ones throw and feasible ones
// conserve the data and respect the class-count bound.
TEST(PartitionTest, RandomSpecsSatisfyInvariants) {
  for (int trial = 0; trial < 60; ++trial) {
    const int classes = 2 + trial % 5;
    const int per_class = 3 + (trial * 7) % 11;
    const int k = 1 + (trial * 5) % 6;
    const int c = 1 + trial % classes;
    const LabeledDataset ds = Tagged(classes, per_class);
    const PartitionSpec spec{k, c, static_cast<uint64_t>(trial)};
    const bool feasible = k * c >= classes && k * c <= classes * per_class;
    if (!feasible) {
      EXPECT_THROW(PartitionNonIid(ds, spec), InvalidArgument) << trial;
      continue;
    }
    const auto clients = PartitionNonIid(ds, spec);
    std::multiset<std::pair<double, int>> merged;
    for (const ClientData& cd : clients) {
      EXPECT_THAT(cd.shard_ids, SizeIs(c));
      EXPECT_LE(cd.DistinctClasses().size(), static_cast<std::size_t>(c));
      const auto rows = Rows(cd.labeled);
      merged.insert(rows.begin(), rows.end());
    }
    EXPECT_EQ(merged, Rows(ds)) << "trial " << trial;
  }
}

// Property: with one shard per client every shard is observable on its own,
// so single-class shards and the +-1 size balance can be checked directly.
TEST(PartitionTest, ShardsAreSingleClassAndBalanced) {
  for (int trial = 0; trial < 30; ++trial) {
    const int classes = 2 + trial % 4;
    const int per_class = 7 + trial;
    const int k = classes * (1 + trial % 3) + trial % 2;
    const LabeledDataset ds = Tagged(classes, per_class);
    const auto clients =
        PartitionNonIid(ds, {k, 1, static_cast<uint64_t>(100 + trial)});
    std::map<int, std::vector<std::size_t>> sizes;
    for (const ClientData& cd : clients) {
      ASSERT_THAT(cd.DistinctClasses(), SizeIs(1));
      sizes[cd.DistinctClasses()[0]].push_back(cd.labeled.size());
    }
    for (const auto& [cls, s] : sizes) {
      const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
      EXPECT_LE(*hi - *lo, 1u) << "class " << cls;
    }
  }
}

TEST(SplitTest, KeepsRequestedLabelCount) {
  const auto clients = PartitionNonIid(Tagged(2, 50), {1, 2, 0});
  const ClientData split = SplitSemiSupervised(clients[0], 10, 3);
  EXPECT_EQ(split.labeled.size(), 10u);
  ASSERT_TRUE(split.unlabeled.has_value());
  EXPECT_EQ(split.unlabeled->rows(), 90);
  EXPECT_EQ(split.unlabeled->cols(), split.labeled.examples.cols());
  // Stratified: 5 of each class.
  EXPECT_THAT(split.ClassCounts(), ElementsAre(5, 5));
  EXPECT_EQ(split.TotalExamples(), 100u);
}

TEST(SplitTest, Boundaries) {
  const auto clients = PartitionNonIid(Tagged(3, 10), {1, 3, 0});
  const ClientData all = SplitSemiSupervised(clients[0], 30, 1);
  ASSERT_TRUE(all.unlabeled.has_value());
  EXPECT_EQ(all.unlabeled->rows(), 0);
  EXPECT_THROW(SplitSemiSupervised(clients[0], 0, 1), InvalidArgument);
  EXPECT_THROW(SplitSemiSupervised(clients[0], 31, 1), InvalidArgument);
}

TEST(SplitTest, EveryClassGetsALabelWhenBudgetAllows) {
  LabeledDataset ds = Tagged(3, 1);
  // Skewed: 40 of class 0, 1 each of classes 1 and 2.
  ds.examples = Matrix::Constant(42, 2, 0.5);
  ds.labels.assign(42, 0);
  ds.labels[10] = 1;
  ds.labels[20] = 2;
  ClientData cd;
  cd.labeled = ds;
  const ClientData split = SplitSemiSupervised(cd, 3, 9);
  EXPECT_THAT(split.ClassCounts(), ElementsAre(1, 1, 1));
}

TEST(SplitTest, PreservesExamples) {
  const auto clients = PartitionNonIid(Tagged(2, 20), {1, 2, 0});
  const ClientData split = SplitSemiSupervised(clients[0], 7, 2);
  std::multiset<double> before, after;
  for (Eigen::Index i = 0; i < clients[0].labeled.examples.rows(); ++i) {
    before.insert(clients[0].labeled.examples(i, 0));
  }
  for (Eigen::Index i = 0; i < split.labeled.examples.rows(); ++i) {
    after.insert(split.labeled.examples(i, 0));
  }
  for (Eigen::Index i = 0; i < split.unlabeled->rows(); ++i) {
    after.insert((*split.unlabeled)(i, 0));
  }
  EXPECT_EQ(before, after);
}

TEST(PartitionManifestTest, OneLinePerClient) {
  const auto clients = PartitionNonIid(Tagged(2, 4), {2, 1, 0});
  std::ostringstream os;
  WritePartitionManifest(os, clients);
  const std::string text = os.str();
  EXPECT_THAT(text, HasSubstr("client_id=0 shards="));
  EXPECT_THAT(text, HasSubstr("client_id=1 shards="));
  EXPECT_THAT(text, HasSubstr("counts="));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(MergeLabeledTest, ConcatenatesClients) {
  const LabeledDataset ds = Tagged(3, 4);
  const auto clients = PartitionNonIid(ds, {3, 1, 5});
  EXPECT_EQ(Rows(MergeLabeled(clients)), Rows(ds));
}

TEST(RenderDigitsTest, ShapeRangeAndDeterminism) {
  const LabeledDataset a = RenderDigits(4, 11);
  EXPECT_EQ(a.size(), 40u);
  EXPECT_EQ(a.feature_dim(), 64);
  EXPECT_THAT(a.feature_shape, ElementsAre(8, 8));
  EXPECT_NO_THROW(a.Validate());
  for (int c = 0; c < 10; ++c) {
    for (int i = 0; i < 4; ++i) EXPECT_EQ(a.labels[static_cast<std::size_t>(c * 4 + i)], c);
  }
  EXPECT_EQ(RenderDigits(4, 11).examples, a.examples);
  EXPECT_NE(RenderDigits(4, 12).examples, a.examples);
}

TEST(GaussianRingTest, UnitSquareAndInverseMapping) {
  RingGeometry g;
  const LabeledDataset ds = GaussianRing(500, g, 3);
  EXPECT_NO_THROW(ds.Validate());
  EXPECT_EQ(ds.num_classes, 8);
  for (const Eigen::Vector2d& c : g.Centers()) {
    EXPECT_NEAR(c.norm(), g.radius, 1e-12);
    const Eigen::Vector2d back = g.FromUnit(g.ToUnit(c));
    EXPECT_NEAR((back - c).norm(), 0.0, 1e-12);
  }
  // Every sample lies near the center of the mode it was drawn from.
  const auto centers = g.Centers();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Eigen::Vector2d x =
        g.FromUnit(Eigen::Vector2d(ds.examples(static_cast<Eigen::Index>(i), 0),
                                   ds.examples(static_cast<Eigen::Index>(i), 1)));
    EXPECT_LT((x - centers[static_cast<std::size_t>(ds.labels[i])]).norm(),
              6 * g.stddev);
  }
}

}  // namespace
}  // namespace sdafl::data
