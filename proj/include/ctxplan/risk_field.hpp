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

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctxplan/rule_engine.hpp"
#include "ctxplan/scene_graph.hpp"

namespace ctxplan::field {

using rules::RiskLevel;

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ObjectClass { kCar, kArtObject, kPedestrian };
enum class LineType { kSolid, kDashed };

inline const char* ToString(ObjectClass c) {
  switch (c) {
    case ObjectClass::kCar: return "car";
    case ObjectClass::kArtObject: return "artificial_object";
    case ObjectClass::kPedestrian: return "pedestrian";
  }
  return "?";
}

struct MarkingParams {
  double amplitude = 0.0;
  double sigma = 0.6;
};

struct ObjectParams {
  double amplitude = 0.0;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
};

/// Marking amplitude by line type and crossing acceptability.
inline MarkingParams MarkingParamsFor(LineType type, int acceptability) {
  if (acceptability != 0) return {0.0, 0.6};
  return {type == LineType::kSolid ? 4.0 : 1.5, 0.6};
}

/// Object amplitude and spread: sigma_x = 1.5 l + c, sigma_y = 1.2 w + c with
/// the offset c depending on class and risk level.
inline ObjectParams ObjectParamsFor(ObjectClass cls, RiskLevel risk, double length,
                                    double width) {
  struct Row {
    double amplitude;
    double offset;
  };
  static constexpr Row kCar[3] = {{2, 0.05}, {3, 0.1}, {4, 0.3}};
  static constexpr Row kArt[3] = {{1, 0.2}, {2, 0.25}, {3, 0.4}};
  static constexpr Row kPed[3] = {{2, 1.2}, {3, 1.7}, {4, 2.2}};
  const Row* table = cls == ObjectClass::kCar ? kCar
                     : cls == ObjectClass::kPedestrian ? kPed
                                                       : kArt;
  const Row row = table[static_cast<int>(risk)];
  return {row.amplitude, 1.5 * length + row.offset, 1.2 * width + row.offset};
}

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct FieldSample {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

/// Bivariate Gaussian risk around an object, moving along its prediction.
struct ObjectField {
  double amplitude = 0.0;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  std::vector<Pose2> centers;  // k = 0..N
  std::int64_t track_id = -1;
  ObjectClass object_class = ObjectClass::kArtObject;

  FieldSample Sample(std::size_t k, double x, double y) const {
    const Pose2& c = centers.at(k);
    const double ct = std::cos(c.theta), st = std::sin(c.theta);
    const double dx = x - c.x, dy = y - c.y;
    // Offsets in the object frame: R^T d.
    const double lon = ct * dx + st * dy;
    const double lat = -st * dx + ct * dy;
    const double ix = 1.0 / (sigma_x * sigma_x), iy = 1.0 / (sigma_y * sigma_y);
    const double f = lon * lon * ix + lat * lat * iy;
    FieldSample s;
    s.value = amplitude * std::exp(-0.5 * f);
    // d/dp of -f/2 = -(R diag(ix, iy) R^T) d
    const double glon = -lon * ix, glat = -lat * iy;
    s.dx = s.value * (ct * glon - st * glat);
    s.dy = s.value * (st * glon + ct * glat);
    return s;
  }

  double Eval(std::size_t k, double x, double y) const { return Sample(k, x, y).value; }
};

struct Cubic {
  std::array<double, 4> c{};  // c0 + c1 x + c2 x^2 + c3 x^3

  double operator()(double x) const { return c[0] + x * (c[1] + x * (c[2] + x * c[3])); }
  double Derivative(double x) const { return c[1] + x * (2.0 * c[2] + x * 3.0 * c[3]); }
};

/// Gaussian ridge along a lane marking, a function of the lateral distance
/// to the marking polynomial at the query x.
struct MarkingField {
  double amplitude = 0.0;
  double sigma = 0.6;
  Cubic polynomial;
  LineType line_type = LineType::kDashed;

  FieldSample Sample(double x, double y) const {
    const double e = y - polynomial(x);
    const double is2 = 1.0 / (sigma * sigma);
    FieldSample s;
    s.value = amplitude * std::exp(-0.5 * e * e * is2);
    s.dy = -s.value * e * is2;
    s.dx = s.value * e * is2 * polynomial.Derivative(x);
    return s;
  }

  double Eval(double x, double y) const { return Sample(x, y).value; }
};

struct RiskFieldSet {
  std::vector<ObjectField> objects;
  std::vector<MarkingField> markings;

  bool empty() const { return objects.empty() && markings.empty(); }

  /// Weighted sum of the object fields and the marking fields.
  FieldSample Sample(std::size_t k, double x, double y, double object_weight = 1.0,
                     double marking_weight = 1.0) const {
    FieldSample total;
    for (const auto& o : objects) {
      const auto s = o.Sample(k, x, y);
      total.value += object_weight * s.value;
      total.dx += object_weight * s.dx;
      total.dy += object_weight * s.dy;
    }
    for (const auto& m : markings) {
      const auto s = m.Sample(x, y);
      total.value += marking_weight * s.value;
      total.dx += marking_weight * s.dx;
      total.dy += marking_weight * s.dy;
    }
    return total;
  }

  double Eval(std::size_t k, double x, double y) const { return Sample(k, x, y).value; }

  double AmplitudeSum() const {
    double sum = 0.0;
    for (const auto& o : objects) sum += o.amplitude;
    for (const auto& m : markings) sum += m.amplitude;
    return sum;
  }
};

inline ObjectClass ClassOf(const kg::SceneGraph& graph, kg::NodeId object) {
  if (graph.IsInstanceOf(object, "car")) return ObjectClass::kCar;
  if (graph.IsInstanceOf(object, "pedestrian")) return ObjectClass::kPedestrian;
  return ObjectClass::kArtObject;
}

using Predictions = std::map<std::int64_t, std::vector<Pose2>>;

/// Populates one field per object (keyed by its track_id into `predictions`)
/// and one per lane marking from the resolved rule conclusions.
inline RiskFieldSet BuildRiskFields(const kg::SceneGraph& graph, const Predictions& predictions,
                                    std::size_t horizon) {
  RiskFieldSet set;
  for (kg::NodeId o : graph.InstancesOf("object")) {
    const auto track = graph.Attribute(o, "track_id");
    if (!track) throw InputError("object without track_id");
    const std::int64_t id = std::get<std::int64_t>(*track);
    auto it = predictions.find(id);
    if (it == predictions.end()) {
      throw InputError("missing prediction for track " + std::to_string(id));
    }
    if (it->second.size() != horizon + 1) {
      throw InputError("prediction for track " + std::to_string(id) + " has wrong length");
    }
    const double length = graph.NumberAttribute(o, "length").value_or(1.0);
    const double width = graph.NumberAttribute(o, "width").value_or(1.0);
    const ObjectClass cls = ClassOf(graph, o);
    const auto risk = rules::RiskLevelOf(graph, o);
    const ObjectParams p = ObjectParamsFor(cls, risk.level, length, width);
    set.objects.push_back({p.amplitude, p.sigma_x, p.sigma_y, it->second, id, cls});
  }
  for (kg::NodeId m : graph.InstancesOf("lane_marking")) {
    const auto type = graph.Attribute(m, "lane_marking_type");
    const LineType lt = (type && std::get<std::string>(*type) == "solid") ? LineType::kSolid
                                                                         : LineType::kDashed;
    const auto acc = rules::CrossingAcceptability(graph, m);
    const MarkingParams p = MarkingParamsFor(lt, acc.acceptability);
    Cubic poly;
    for (int i = 0; i < 4; ++i) {
      poly.c[i] = graph.NumberAttribute(m, "poly_c" + std::to_string(i)).value_or(0.0);
    }
    set.markings.push_back({p.amplitude, p.sigma, poly, lt});
  }
  return set;
}

struct RasterGrid {
  double x_min = -10.0, x_max = 60.0;
  double y_min = -6.0, y_max = 10.0;
  double resolution = 0.5;
};

/// Total field at step k as a comma-separated matrix: the first row holds the
/// x coordinates, each following row starts with its y coordinate.
inline void WriteRaster(std::ostream& os, const RiskFieldSet& fields, std::size_t k,
                        const RasterGrid& grid) {
  const int nx = static_cast<int>(std::floor((grid.x_max - grid.x_min) / grid.resolution)) + 1;
  const int ny = static_cast<int>(std::floor((grid.y_max - grid.y_min) / grid.resolution)) + 1;
  os << "y\\x";
  for (int i = 0; i < nx; ++i) os << ',' << grid.x_min + i * grid.resolution;
  os << '\n';
  for (int j = 0; j < ny; ++j) {
    const double y = grid.y_min + j * grid.resolution;
    os << y;
    for (int i = 0; i < nx; ++i) os << ',' << fields.Eval(k, grid.x_min + i * grid.resolution, y);
    os << '\n';
  }
}

}  // namespace ctxplan::field
