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

#ifndef SDAFL_TOY_DATA_H_
#define SDAFL_TOY_DATA_H_

#include <cstdint>
#include <vector>

#include "sdafl/data.h"
#include "sdafl/tensor.h"

namespace sdafl::data {

// Handwriting-like 8x8 digits: stroke templates for 0-9 drawn with random
// affine distortion, stroke width and control-point jitter on a 32x32 canvas,
// box-downsampled to 8x8 and perturbed with pixel noise. `per_class` examples
// of every class, class-major order.
LabeledDataset RenderDigits(int per_class, uint64_t seed);

// Mixture of `modes` isotropic Gaussians on a circle, expressed in the unit
// square through `RingGeometry` so samples satisfy the [0,1] data contract.
struct RingGeometry {
  int modes = 8;
  double radius = 2.0;
  double stddev = 0.05;
  // Unit-square coordinates: u = (x + half_extent) / (2 * half_extent).
  double half_extent = 2.5;

  std::vector<Eigen::Vector2d> Centers() const;
  Eigen::Vector2d ToUnit(const Eigen::Vector2d& x) const;
  Eigen::Vector2d FromUnit(const Eigen::Vector2d& u) const;
  // Rows mapped back from unit coordinates to the ring's native plane.
  Matrix FromUnit(const Matrix& u) const;
};

// `n` ring samples in unit-square coordinates; labels are mode indices.
LabeledDataset GaussianRing(int n, const RingGeometry& geometry, uint64_t seed);

// Two isotropic 2-D blobs in the unit square, labels 0/1.
LabeledDataset TwoBlobs(int per_class, const Eigen::Vector2d& center0,
                        const Eigen::Vector2d& center1, double stddev,
                        uint64_t seed);

}  // namespace sdafl::data

#endif  // SDAFL_TOY_DATA_H_
