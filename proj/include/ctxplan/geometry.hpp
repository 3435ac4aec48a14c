// Copyright 2026 The ctxplan Authors
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

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace ctxplan::geom {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double Dot(Vec2 o) const { return x * o.x + y * o.y; }
  double Norm() const { return std::hypot(x, y); }
};

/// Rectangle given by its center, heading, length (along heading) and width.
struct OrientedBox {
  Vec2 center;
  double heading = 0.0;
  double length = 1.0;
  double width = 1.0;

  Vec2 Axis() const { return {std::cos(heading), std::sin(heading)}; }
  Vec2 Normal() const { return {-std::sin(heading), std::cos(heading)}; }

  // Counter-clockwise from the rear-right corner.
  std::array<Vec2, 4> Corners() const {
    const Vec2 ax = Axis() * (0.5 * length);
    const Vec2 ay = Normal() * (0.5 * width);
    return {center - ax - ay, center + ax - ay, center + ax + ay, center - ax + ay};
  }
};

inline double PointSegmentDistance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.Dot(ab);
  double t = len2 > 0.0 ? (p - a).Dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).Norm();
}

/// Separating-axis test on the four face normals.
inline bool Overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.Corners();
  const auto cb = b.Corners();
  for (Vec2 axis : {a.Axis(), a.Normal(), b.Axis(), b.Normal()}) {
    double amin = std::numeric_limits<double>::infinity(), amax = -amin;
    double bmin = amin, bmax = -amin;
    for (const auto& c : ca) {
      amin = std::min(amin, c.Dot(axis));
      amax = std::max(amax, c.Dot(axis));
    }
    for (const auto& c : cb) {
      bmin = std::min(bmin, c.Dot(axis));
      bmax = std::max(bmax, c.Dot(axis));
    }
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

/// Minimum Euclidean distance between two rectangles, 0 if they overlap.
inline double BoxDistance(const OrientedBox& a, const OrientedBox& b) {
  if (Overlap(a, b)) return 0.0;
  const auto ca = a.Corners();
  const auto cb = b.Corners();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    const Vec2 a0 = ca[i], a1 = ca[(i + 1) % 4];
    const Vec2 b0 = cb[i], b1 = cb[(i + 1) % 4];
    for (const auto& p : cb) best = std::min(best, PointSegmentDistance(p, a0, a1));
    for (const auto& p : ca) best = std::min(best, PointSegmentDistance(p, b0, b1));
  }
  return best;
}

}  // namespace ctxplan::geom
