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

#ifndef SDAFL_PARAM_VECTOR_H_
#define SDAFL_PARAM_VECTOR_H_

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sdafl/tensor.h"

namespace sdafl {

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const Segment&) const = default;
};

using Layout = std::vector<Segment>;

// Builds a contiguous layout from (name, length) pairs.
Layout MakeLayout(
    const std::vector<std::pair<std::string, std::size_t>>& segments);

// Flat parameter storage with a named-segment layout. Copies are deep for the
// values and share the immutable layout.
class ParamVector {
 public:
  ParamVector();
  explicit ParamVector(Layout layout);
  ParamVector(Layout layout, Vector values);
  // Single segment named "values".
  static ParamVector FromValues(const Vector& values);

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  const Vector& values() const { return values_; }
  Vector& mutable_values() { return values_; }
  double operator[](std::size_t i) const {
    return values_[static_cast<Eigen::Index>(i)];
  }

  const Layout& layout() const { return *layout_; }
  bool SameLayout(const ParamVector& other) const;
  // Throws InvalidArgument naming the first differing segment.
  void RequireLayout(const Layout& expected, std::string_view context) const;
  const Segment& segment(std::string_view name) const;

  Eigen::Map<const Vector> SegmentValues(std::string_view name) const;
  Eigen::Map<Vector> MutableSegmentValues(std::string_view name);

  ParamVector ZerosLike() const;
  bool AllFinite() const { return values_.allFinite(); }

  bool operator==(const ParamVector& other) const;

 private:
  std::shared_ptr<const Layout> layout_;
  Vector values_;
};

}  // namespace sdafl

#endif  // SDAFL_PARAM_VECTOR_H_
