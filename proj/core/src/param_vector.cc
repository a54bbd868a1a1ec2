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

#include "sdafl/param_vector.h"

#include "sdafl/errors.h"

namespace sdafl {
namespace {

void CheckLayout(const Layout& layout, std::size_t total) {
  std::size_t expected_offset = 0;
  for (const Segment& s : layout) {
    if (s.offset != expected_offset) {
      throw InvalidArgument("segment '" + s.name + "' is not contiguous");
    }
    expected_offset += s.length;
  }
  if (expected_offset != total) {
    throw InvalidArgument("layout covers " + std::to_string(expected_offset) +
                          " values but vector holds " + std::to_string(total));
  }
}

}  // namespace

Layout MakeLayout(
    const std::vector<std::pair<std::string, std::size_t>>& segments) {
  Layout layout;
  std::size_t offset = 0;
  for (const auto& [name, length] : segments) {
    layout.push_back({name, offset, length});
    offset += length;
  }
  return layout;
}

ParamVector::ParamVector() : layout_(std::make_shared<const Layout>()) {}

ParamVector::ParamVector(Layout layout) {
  std::size_t total = 0;
  for (const Segment& s : layout) total += s.length;
  CheckLayout(layout, total);
  values_ = Vector::Zero(static_cast<Eigen::Index>(total));
  layout_ = std::make_shared<const Layout>(std::move(layout));
}

ParamVector::ParamVector(Layout layout, Vector values)
    : values_(std::move(values)) {
  CheckLayout(layout, size());
  layout_ = std::make_shared<const Layout>(std::move(layout));
}

ParamVector ParamVector::FromValues(const Vector& values) {
  return ParamVector(
      MakeLayout({{"values", static_cast<std::size_t>(values.size())}}),
      values);
}

bool ParamVector::SameLayout(const ParamVector& other) const {
  return layout_ == other.layout_ || *layout_ == *other.layout_;
}

void ParamVector::RequireLayout(const Layout& expected,
                                std::string_view context) const {
  const Layout& have = *layout_;
  for (std::size_t i = 0; i < std::max(have.size(), expected.size()); ++i) {
    if (i >= have.size()) {
      throw InvalidArgument(std::string(context) + ": missing segment '" +
                            expected[i].name + "'");
    }
    if (i >= expected.size()) {
      throw InvalidArgument(std::string(context) + ": unexpected segment '" +
                            have[i].name + "'");
    }
    if (!(have[i] == expected[i])) {
      throw InvalidArgument(
          std::string(context) + ": segment '" + have[i].name + "' (length " +
          std::to_string(have[i].length) + ") does not match expected '" +
          expected[i].name + "' (length " + std::to_string(expected[i].length) +
          ")");
    }
  }
}

const Segment& ParamVector::segment(std::string_view name) const {
  for (const Segment& s : *layout_) {
    if (s.name == name) return s;
  }
  throw InvalidArgument("no segment named '" + std::string(name) + "'");
}

Eigen::Map<const Vector> ParamVector::SegmentValues(
    std::string_view name) const {
  const Segment& s = segment(name);
  return {values_.data() + s.offset, static_cast<Eigen::Index>(s.length)};
}

Eigen::Map<Vector> ParamVector::MutableSegmentValues(std::string_view name) {
  const Segment& s = segment(name);
  return {values_.data() + s.offset, static_cast<Eigen::Index>(s.length)};
}

ParamVector ParamVector::ZerosLike() const {
  ParamVector out;
  out.layout_ = layout_;
  out.values_ = Vector::Zero(values_.size());
  return out;
}

bool ParamVector::operator==(const ParamVector& other) const {
  return SameLayout(other) && values_.size() == other.values_.size() &&
         values_ == other.values_;
}

}  // namespace sdafl
