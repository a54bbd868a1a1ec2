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
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "sdafl/errors.h"
#include "sdafl/rng.h"

namespace sdafl::data {
namespace {

std::string Str(const std::filesystem::path& p) { return p.string(); }

uint32_t ReadBigEndianU32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw IoError("truncated IDX header in " + what);
  }
  return (uint32_t{b[0]} << 24) | (uint32_t{b[1]} << 16) |
         (uint32_t{b[2]} << 8) | uint32_t{b[3]};
}

void WriteBigEndianU32(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

struct IdxArray {
  std::vector<uint32_t> dims;
  std::vector<unsigned char> bytes;
};

IdxArray ReadIdx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open IDX file " + Str(path));
  unsigned char magic[4];
  if (!in.read(reinterpret_cast<char*>(magic), 4)) {
    throw IoError("truncated IDX header in " + Str(path));
  }
  if (magic[0] != 0 || magic[1] != 0) {
    throw IoError("bad IDX magic in " + Str(path));
  }
  if (magic[2] != 0x08) {
    throw IoError("only unsigned-byte IDX data is supported: " + Str(path));
  }
  const int ndims = magic[3];
  if (ndims < 1) throw IoError("IDX file without dimensions: " + Str(path));
  IdxArray a;
  std::size_t total = 1;
  for (int i = 0; i < ndims; ++i) {
    a.dims.push_back(ReadBigEndianU32(in, Str(path)));
    total *= a.dims.back();
  }
  a.bytes.resize(total);
  if (total > 0 &&
      !in.read(reinterpret_cast<char*>(a.bytes.data()),
               static_cast<std::streamsize>(total))) {
    throw IoError("truncated IDX payload in " + Str(path));
  }
  return a;
}

std::filesystem::path DeriveLabelsPath(const std::filesystem::path& images) {
  std::string name = images.filename().string();
  auto replace = [&name](const std::string& from, const std::string& to) {
    const auto pos = name.find(from);
    if (pos != std::string::npos) name.replace(pos, from.size(), to);
  };
  replace("images", "labels");
  replace("idx3", "idx1");
  if (name == images.filename().string()) {
    throw InvalidArgument("cannot derive an IDX label path from " +
                          Str(images) + "; set labels_path");
  }
  return images.parent_path() / name;
}

LabeledDataset LoadIdx(const std::filesystem::path& path,
                       const LoadOptions& options) {
  const IdxArray images = ReadIdx(path);
  const std::filesystem::path labels_path =
      options.labels_path.empty() ? DeriveLabelsPath(path)
                                  : options.labels_path;
  const IdxArray labels = ReadIdx(labels_path);
  if (labels.dims.size() != 1) {
    throw IoError("IDX label file must be one-dimensional: " +
                  Str(labels_path));
  }
  const std::size_t n = images.dims[0];
  if (labels.dims[0] != n) {
    throw InvalidArgument("IDX image/label count mismatch: " +
                          std::to_string(n) + " vs " +
                          std::to_string(labels.dims[0]));
  }
  LabeledDataset ds;
  std::size_t dim = 1;
  for (std::size_t i = 1; i < images.dims.size(); ++i) {
    ds.feature_shape.push_back(static_cast<int>(images.dims[i]));
    dim *= images.dims[i];
  }
  if (ds.feature_shape.empty()) ds.feature_shape.push_back(1);
  ds.examples.resize(static_cast<Eigen::Index>(n),
                     static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n * dim; ++i) {
    ds.examples.data()[i] = images.bytes[i] / 255.0;
  }
  ds.labels.assign(labels.bytes.begin(), labels.bytes.end());
  const int max_label =
      n == 0 ? -1 : *std::max_element(ds.labels.begin(), ds.labels.end());
  ds.num_classes = options.num_classes > 0 ? options.num_classes
                                           : max_label + 1;
  ds.Validate();
  return ds;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseDouble(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used])))
      ++used;
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("unparseable number '" + s + "' at " + where);
  }
}

LabeledDataset LoadCsv(const std::filesystem::path& path,
                       const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file " + Str(path));
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV file " + Str(path));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = SplitCsvLine(line);
  if (header.size() < 2 || header.back() != "label") {
    throw IoError("CSV header must be f0,...,fD,label in " + Str(path));
  }
  for (std::size_t i = 0; i + 1 < header.size(); ++i) {
    if (header[i] != "f" + std::to_string(i)) {
      throw IoError("CSV header column " + std::to_string(i) + " is '" +
                    header[i] + "', expected f" + std::to_string(i));
    }
  }
  const std::size_t dim = header.size() - 1;
  std::vector<double> values;
  std::vector<int> labels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = SplitCsvLine(line);
    const std::string where = Str(path) + ":" + std::to_string(line_no);
    if (cells.size() != dim + 1) {
      throw InvalidArgument("expected " + std::to_string(dim + 1) +
                            " columns at " + where);
    }
    for (std::size_t i = 0; i < dim; ++i) {
      values.push_back(ParseDouble(cells[i], where));
    }
    const double label = ParseDouble(cells[dim], where);
    if (label != std::floor(label) || label < 0) {
      throw InvalidArgument("label must be a nonnegative integer at " + where);
    }
    labels.push_back(static_cast<int>(label));
  }
  LabeledDataset ds;
  ds.feature_shape = {static_cast<int>(dim)};
  ds.labels = std::move(labels);
  ds.examples.resize(static_cast<Eigen::Index>(ds.labels.size()),
                     static_cast<Eigen::Index>(dim));
  std::copy(values.begin(), values.end(), ds.examples.data());
  if (ds.examples.size() > 0 && ds.examples.maxCoeff() > 1.0) {
    if (options.pixel_max <= 0) {
      throw InvalidArgument("pixel_max must be positive");
    }
    ds.examples /= options.pixel_max;
  }
  const int max_label =
      ds.labels.empty() ? -1
                        : *std::max_element(ds.labels.begin(), ds.labels.end());
  ds.num_classes = options.num_classes > 0 ? options.num_classes
                                           : max_label + 1;
  ds.Validate();
  return ds;
}

}  // namespace

void LabeledDataset::Validate() const {
  if (num_classes <= 0) throw InvalidArgument("num_classes must be positive");
  if (static_cast<std::size_t>(examples.rows()) != labels.size()) {
    throw InvalidArgument("examples and labels differ in length");
  }
  int shape_product = 1;
  for (int d : feature_shape) shape_product *= d;
  if (!feature_shape.empty() && shape_product != examples.cols()) {
    throw InvalidArgument("feature shape does not match example width");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw InvalidArgument("label " + std::to_string(labels[i]) +
                            " at row " + std::to_string(i) +
                            " outside [0, " + std::to_string(num_classes) +
                            ")");
    }
  }
  if (examples.size() > 0 &&
      (!examples.allFinite() || examples.minCoeff() < 0.0 ||
       examples.maxCoeff() > 1.0)) {
    throw InvalidArgument("example values must lie in [0, 1]");
  }
}

Matrix GatherRows(const Matrix& m, const std::vector<std::size_t>& indices) {
  Matrix out(static_cast<Eigen::Index>(indices.size()), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        m.row(static_cast<Eigen::Index>(indices[i]));
  }
  return out;
}

Matrix OneHot(const std::vector<int>& labels, int num_classes) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()),
                          num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return y;
}

LabeledDataset LabeledDataset::Subset(
    const std::vector<std::size_t>& indices) const {
  LabeledDataset out;
  out.num_classes = num_classes;
  out.feature_shape = feature_shape;
  out.examples = GatherRows(examples, indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  return out;
}

Matrix LabeledDataset::OneHotLabels() const {
  return OneHot(labels, num_classes);
}

DatasetFormat ParseDatasetFormat(std::string_view tag) {
  if (tag == "idx") return DatasetFormat::kIdx;
  if (tag == "csv") return DatasetFormat::kCsv;
  throw InvalidArgument("unknown dataset format '" + std::string(tag) +
                        "' (expected idx or csv)");
}

LabeledDataset LoadDataset(const std::filesystem::path& path,
                           DatasetFormat format, const LoadOptions& options) {
  switch (format) {
    case DatasetFormat::kIdx:
      return LoadIdx(path, options);
    case DatasetFormat::kCsv:
      return LoadCsv(path, options);
  }
  throw InvalidArgument("unknown dataset format");
}

void SaveCsv(const LabeledDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + Str(path));
  for (int j = 0; j < ds.feature_dim(); ++j) out << 'f' << j << ',';
  out << "label\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < ds.examples.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.examples.cols(); ++j) {
      out << ds.examples(i, j) << ',';
    }
    out << ds.labels[static_cast<std::size_t>(i)] << '\n';
  }
}

void SaveIdx(const LabeledDataset& ds, const std::filesystem::path& images,
             const std::filesystem::path& labels) {
  std::ofstream img(images, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!img || !lab) throw IoError("cannot write IDX files");
  std::vector<int> shape = ds.feature_shape;
  if (shape.empty()) shape = {ds.feature_dim()};
  const unsigned char img_magic[4] = {0, 0, 0x08,
                                      static_cast<unsigned char>(1 + shape.size())};
  img.write(reinterpret_cast<const char*>(img_magic), 4);
  WriteBigEndianU32(img, static_cast<uint32_t>(ds.size()));
  for (int d : shape) WriteBigEndianU32(img, static_cast<uint32_t>(d));
  for (Eigen::Index i = 0; i < ds.examples.size(); ++i) {
    const double v = std::clamp(ds.examples.data()[i], 0.0, 1.0);
    img.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255))));
  }
  const unsigned char lab_magic[4] = {0, 0, 0x08, 1};
  lab.write(reinterpret_cast<const char*>(lab_magic), 4);
  WriteBigEndianU32(lab, static_cast<uint32_t>(ds.size()));
  for (int l : ds.labels) lab.put(static_cast<char>(l));
}

uint64_t ContentHash(const LabeledDataset& ds) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  const int64_t rows = ds.examples.rows(), cols = ds.examples.cols();
  mix(&rows, sizeof rows);
  mix(&cols, sizeof cols);
  mix(ds.examples.data(),
      static_cast<std::size_t>(ds.examples.size()) * sizeof(double));
  for (int l : ds.labels) {
    const int32_t v = l;
    mix(&v, sizeof v);
  }
  return h;
}

std::vector<int> ClientData::DistinctClasses() const {
  std::vector<int> out(labeled.labels);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> ClientData::ClassCounts() const {
  std::vector<std::size_t> counts(
      static_cast<std::size_t>(std::max(labeled.num_classes, 0)), 0);
  for (int l : labeled.labels) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

std::size_t ClientData::TotalExamples() const {
  return labeled.size() +
         (unlabeled ? static_cast<std::size_t>(unlabeled->rows()) : 0);
}

std::vector<ClientData> PartitionNonIid(const LabeledDataset& ds,
                                        const PartitionSpec& spec) {
  if (spec.num_clients <= 0 || spec.classes_per_client <= 0) {
    throw InvalidArgument("num_clients and classes_per_client must be positive");
  }
  if (spec.classes_per_client > ds.num_classes) {
    throw InvalidArgument("classes_per_client (" +
                          std::to_string(spec.classes_per_client) +
                          ") exceeds num_classes (" +
                          std::to_string(ds.num_classes) + ")");
  }
  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(ds.num_classes));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }
  std::vector<int> present;
  for (int c = 0; c < ds.num_classes; ++c) {
    if (!by_class[static_cast<std::size_t>(c)].empty()) present.push_back(c);
  }
  const std::size_t num_shards =
      static_cast<std::size_t>(spec.num_clients) *
      static_cast<std::size_t>(spec.classes_per_client);
  if (num_shards < present.size()) {
    throw InvalidArgument("K*C = " + std::to_string(num_shards) +
                          " shards cannot hold " +
                          std::to_string(present.size()) +
                          " classes without dropping data");
  }
  if (ds.size() < num_shards) {
    throw InvalidArgument("dataset has fewer examples than K*C shards");
  }

  Rng rng = Rng::Named(spec.seed, "partition_noniid");
  // Shards per class: round-robin over present classes.
  std::vector<std::size_t> shards_for(present.size(),
                                      num_shards / present.size());
  for (std::size_t i = 0; i < num_shards % present.size(); ++i) ++shards_for[i];

  std::vector<std::vector<std::size_t>> shards;
  for (std::size_t pi = 0; pi < present.size(); ++pi) {
    std::vector<std::size_t>& idx =
        by_class[static_cast<std::size_t>(present[pi])];
    const std::size_t m = shards_for[pi];
    if (idx.size() < m) {
      throw InvalidArgument("class " + std::to_string(present[pi]) + " has " +
                            std::to_string(idx.size()) +
                            " examples for " + std::to_string(m) + " shards");
    }
    rng.Shuffle(idx);
    const std::size_t base = idx.size() / m, extra = idx.size() % m;
    std::size_t pos = 0;
    for (std::size_t s = 0; s < m; ++s) {
      const std::size_t len = base + (s < extra ? 1 : 0);
      shards.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                          idx.begin() + static_cast<std::ptrdiff_t>(pos + len));
      pos += len;
    }
  }

  const std::vector<std::size_t> order = rng.Permutation(shards.size());
  std::vector<ClientData> clients(static_cast<std::size_t>(spec.num_clients));
  const auto c = static_cast<std::size_t>(spec.classes_per_client);
  for (std::size_t k = 0; k < clients.size(); ++k) {
    ClientData& cd = clients[k];
    cd.client_id = static_cast<int>(k);
    for (std::size_t j = 0; j < c; ++j) {
      const std::size_t shard = order[k * c + j];
      cd.shard_ids.push_back(static_cast<int>(shard));
      cd.source_indices.insert(cd.source_indices.end(), shards[shard].begin(),
                               shards[shard].end());
    }
    cd.labeled = ds.Subset(cd.source_indices);
  }
  return clients;
}

ClientData SplitSemiSupervised(const ClientData& cd, std::size_t labeled_count,
                               uint64_t seed) {
  const std::size_t n = cd.labeled.size();
  if (labeled_count == 0) {
    throw InvalidArgument("semi-supervised split needs at least one label");
  }
  if (labeled_count > n) {
    throw InvalidArgument("labeled_count " + std::to_string(labeled_count) +
                          " exceeds the " + std::to_string(n) +
                          " available examples");
  }
  Rng rng = Rng::Named(seed, "split_semisupervised",
                       {static_cast<uint64_t>(cd.client_id)});
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[cd.labeled.labels[i]].push_back(i);

  // Largest-remainder allocation proportional to class size, every class
  // receiving at least one label while the budget allows.
  std::map<int, std::size_t> quota;
  std::vector<std::pair<double, int>> remainders;
  std::size_t assigned = 0;
  for (auto& [cls, idx] : by_class) {
    rng.Shuffle(idx);
    const double exact = static_cast<double>(labeled_count) *
                         static_cast<double>(idx.size()) /
                         static_cast<double>(n);
    quota[cls] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[cls];
    remainders.emplace_back(exact - std::floor(exact), cls);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < labeled_count; ++i) {
    const int cls = remainders[i % remainders.size()].second;
    if (quota[cls] < by_class[cls].size()) {
      ++quota[cls];
      ++assigned;
    }
  }
  for (auto& [cls, q] : quota) {
    if (q > 0) continue;
    // Borrow from the class with the largest quota to keep every class
    // anchored by at least one label.
    auto donor = std::max_element(
        quota.begin(), quota.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    if (donor->second > 1) {
      --donor->second;
      q = 1;
    }
  }

  std::vector<std::size_t> keep, drop;
  for (auto& [cls, idx] : by_class) {
    const std::size_t q = quota[cls];
    keep.insert(keep.end(), idx.begin(),
                idx.begin() + static_cast<std::ptrdiff_t>(q));
    drop.insert(drop.end(), idx.begin() + static_cast<std::ptrdiff_t>(q),
                idx.end());
  }
  std::sort(keep.begin(), keep.end());
  std::sort(drop.begin(), drop.end());

  ClientData out;
  out.client_id = cd.client_id;
  out.shard_ids = cd.shard_ids;
  out.labeled = cd.labeled.Subset(keep);
  out.unlabeled = GatherRows(cd.labeled.examples, drop);
  if (!cd.source_indices.empty()) {
    for (std::size_t i : keep) out.source_indices.push_back(cd.source_indices[i]);
    for (std::size_t i : drop) out.source_indices.push_back(cd.source_indices[i]);
  }
  return out;
}

void WritePartitionManifest(std::ostream& os,
                            const std::vector<ClientData>& clients) {
  for (const ClientData& cd : clients) {
    os << "client_id=" << cd.client_id << " shards=";
    for (std::size_t i = 0; i < cd.shard_ids.size(); ++i) {
      os << (i ? "," : "") << cd.shard_ids[i];
    }
    os << " counts=";
    const std::vector<std::size_t> counts = cd.ClassCounts();
    bool first = true;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == 0) continue;
      os << (first ? "" : ",") << c << ':' << counts[c];
      first = false;
    }
    if (cd.unlabeled) os << " unlabeled=" << cd.unlabeled->rows();
    os << '\n';
  }
}

LabeledDataset MergeLabeled(const std::vector<ClientData>& clients) {
  LabeledDataset out;
  if (clients.empty()) return out;
  out.num_classes = clients.front().labeled.num_classes;
  out.feature_shape = clients.front().labeled.feature_shape;
  Eigen::Index rows = 0;
  for (const ClientData& cd : clients) rows += cd.labeled.examples.rows();
  out.examples.resize(rows, clients.front().labeled.examples.cols());
  Eigen::Index at = 0;
  for (const ClientData& cd : clients) {
    out.examples.middleRows(at, cd.labeled.examples.rows()) =
        cd.labeled.examples;
    at += cd.labeled.examples.rows();
    out.labels.insert(out.labels.end(), cd.labeled.labels.begin(),
                      cd.labeled.labels.end());
  }
  return out;
}

}  // namespace sdafl::data
