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

#include "sdafl/toy_data.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "sdafl/errors.h"
#include "sdafl/rng.h"

namespace sdafl::data {
namespace {

using Point = Eigen::Vector2d;
using Stroke = std::vector<Point>;

Stroke Ellipse(double cx, double cy, double rx, double ry, double from_deg,
               double to_deg, int segments) {
  Stroke s;
  for (int i = 0; i <= segments; ++i) {
    const double t = (from_deg + (to_deg - from_deg) * i / segments) *
                     std::numbers::pi / 180.0;
    s.emplace_back(cx + rx * std::cos(t), cy + ry * std::sin(t));
  }
  return s;
}

// Glyph outlines in a unit box, y pointing down.
std::vector<Stroke> Glyph(int digit) {
  switch (digit) {
    case 0:
      return {Ellipse(0.5, 0.5, 0.27, 0.38, 0, 360, 16)};
    case 1:
      return {{{0.33, 0.27}, {0.55, 0.1}, {0.55, 0.9}}};
    case 2:
      return {{{0.22, 0.3},
               {0.32, 0.14},
               {0.52, 0.08},
               {0.72, 0.17},
               {0.75, 0.36},
               {0.22, 0.9},
               {0.8, 0.9}}};
    case 3:
      return {{{0.22, 0.12},
               {0.76, 0.12},
               {0.45, 0.44},
               {0.68, 0.52},
               {0.77, 0.72},
               {0.58, 0.9},
               {0.22, 0.86}}};
    case 4:
      return {{{0.66, 0.9}, {0.66, 0.1}, {0.17, 0.64}, {0.84, 0.64}}};
    case 5:
      return {{{0.78, 0.1},
               {0.3, 0.1},
               {0.26, 0.45},
               {0.55, 0.4},
               {0.75, 0.55},
               {0.73, 0.8},
               {0.5, 0.92},
               {0.22, 0.84}}};
    case 6:
      return {{{0.72, 0.1},
               {0.43, 0.27},
               {0.27, 0.55},
               {0.29, 0.82},
               {0.52, 0.92},
               {0.73, 0.78},
               {0.7, 0.57},
               {0.47, 0.5},
               {0.28, 0.62}}};
    case 7:
      return {{{0.16, 0.1}, {0.84, 0.1}, {0.42, 0.9}}};
    case 8:
      return {Ellipse(0.5, 0.29, 0.19, 0.19, 0, 360, 12),
              Ellipse(0.5, 0.7, 0.23, 0.21, 0, 360, 12)};
    case 9:
      return {Ellipse(0.48, 0.32, 0.21, 0.21, 0, 360, 12),
              {{0.69, 0.32}, {0.64, 0.9}}};
    default:
      throw InvalidArgument("digit out of range");
  }
}

double SegmentDistance(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0;
  return (p - (a + t * ab)).norm();
}

constexpr int kCanvas = 32;
constexpr int kSide = 8;
constexpr int kBlock = kCanvas / kSide;

}  // namespace

LabeledDataset RenderDigits(int per_class, uint64_t seed) {
  if (per_class <= 0) throw InvalidArgument("per_class must be positive");
  LabeledDataset ds;
  ds.num_classes = 10;
  ds.feature_shape = {kSide, kSide};
  ds.examples.resize(10 * per_class, kSide * kSide);
  ds.labels.reserve(static_cast<std::size_t>(10 * per_class));
  std::array<double, kCanvas * kCanvas> canvas{};
  for (int digit = 0; digit < 10; ++digit) {
    Rng rng = Rng::Named(seed, "render_digits", {static_cast<uint64_t>(digit)});
    const std::vector<Stroke> glyph = Glyph(digit);
    for (int s = 0; s < per_class; ++s) {
      const double angle = (rng.Uniform() - 0.5) * 0.4;
      const double sx = 0.8 + 0.25 * rng.Uniform();
      const double sy = 0.85 + 0.2 * rng.Uniform();
      const double shear = (rng.Uniform() - 0.5) * 0.4;
      const Point shift((rng.Uniform() - 0.5) * 0.14,
                        (rng.Uniform() - 0.5) * 0.14);
      const double width = 0.06 + 0.05 * rng.Uniform();
      const double ink = 0.8 + 0.2 * rng.Uniform();
      Eigen::Matrix2d affine;
      affine << std::cos(angle), -std::sin(angle), std::sin(angle),
          std::cos(angle);
      Eigen::Matrix2d shape;
      shape << sx, shear, 0.0, sy;
      affine = affine * shape;
      const Point center(0.5, 0.5);

      std::vector<Stroke> strokes;
      for (const Stroke& stroke : glyph) {
        Stroke t;
        for (const Point& p : stroke) {
          const Point jitter(rng.Normal(0, 0.02), rng.Normal(0, 0.02));
          t.push_back(center + affine * (p + jitter - center) + shift);
        }
        strokes.push_back(std::move(t));
      }

      for (int py = 0; py < kCanvas; ++py) {
        for (int px = 0; px < kCanvas; ++px) {
          const Point p((px + 0.5) / kCanvas, (py + 0.5) / kCanvas);
          double d = 1e9;
          for (const Stroke& stroke : strokes) {
            for (std::size_t i = 0; i + 1 < stroke.size(); ++i) {
              d = std::min(d, SegmentDistance(p, stroke[i], stroke[i + 1]));
            }
          }
          canvas[static_cast<std::size_t>(py * kCanvas + px)] =
              std::clamp(1.0 - (d - width) / 0.03, 0.0, 1.0) * ink;
        }
      }

      const int row = digit * per_class + s;
      for (int by = 0; by < kSide; ++by) {
        for (int bx = 0; bx < kSide; ++bx) {
          double acc = 0;
          for (int y = 0; y < kBlock; ++y) {
            for (int x = 0; x < kBlock; ++x) {
              acc += canvas[static_cast<std::size_t>(
                  (by * kBlock + y) * kCanvas + bx * kBlock + x)];
            }
          }
          const double v = acc / (kBlock * kBlock) + rng.Normal(0, 0.03);
          ds.examples(row, by * kSide + bx) = std::clamp(v, 0.0, 1.0);
        }
      }
      ds.labels.push_back(digit);
    }
  }
  return ds;
}

std::vector<Eigen::Vector2d> RingGeometry::Centers() const {
  std::vector<Eigen::Vector2d> c;
  for (int i = 0; i < modes; ++i) {
    const double t = 2.0 * std::numbers::pi * i / modes;
    c.emplace_back(radius * std::cos(t), radius * std::sin(t));
  }
  return c;
}

Eigen::Vector2d RingGeometry::ToUnit(const Eigen::Vector2d& x) const {
  return (x.array() + half_extent) / (2.0 * half_extent);
}

Eigen::Vector2d RingGeometry::FromUnit(const Eigen::Vector2d& u) const {
  return u.array() * (2.0 * half_extent) - half_extent;
}

Matrix RingGeometry::FromUnit(const Matrix& u) const {
  return (u.array() * (2.0 * half_extent) - half_extent).matrix();
}

LabeledDataset GaussianRing(int n, const RingGeometry& geometry,
                            uint64_t seed) {
  if (n <= 0) throw InvalidArgument("n must be positive");
  Rng rng = Rng::Named(seed, "gaussian_ring");
  const std::vector<Eigen::Vector2d> centers = geometry.Centers();
  LabeledDataset ds;
  ds.num_classes = geometry.modes;
  ds.feature_shape = {2};
  ds.examples.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    const int mode = static_cast<int>(rng.Index(centers.size()));
    Eigen::Vector2d x = centers[static_cast<std::size_t>(mode)];
    x.x() += rng.Normal(0, geometry.stddev);
    x.y() += rng.Normal(0, geometry.stddev);
    const Eigen::Vector2d u = geometry.ToUnit(x);
    ds.examples(i, 0) = std::clamp(u.x(), 0.0, 1.0);
    ds.examples(i, 1) = std::clamp(u.y(), 0.0, 1.0);
    ds.labels.push_back(mode);
  }
  return ds;
}

LabeledDataset TwoBlobs(int per_class, const Eigen::Vector2d& center0,
                        const Eigen::Vector2d& center1, double stddev,
                        uint64_t seed) {
  if (per_class <= 0) throw InvalidArgument("per_class must be positive");
  Rng rng = Rng::Named(seed, "two_blobs");
  LabeledDataset ds;
  ds.num_classes = 2;
  ds.feature_shape = {2};
  ds.examples.resize(2 * per_class, 2);
  for (int c = 0; c < 2; ++c) {
    const Eigen::Vector2d& mu = c == 0 ? center0 : center1;
    for (int i = 0; i < per_class; ++i) {
      const int row = c * per_class + i;
      ds.examples(row, 0) = std::clamp(mu.x() + rng.Normal(0, stddev), 0.0, 1.0);
      ds.examples(row, 1) = std::clamp(mu.y() + rng.Normal(0, stddev), 0.0, 1.0);
      ds.labels.push_back(c);
    }
  }
  return ds;
}

}  // namespace sdafl::data
