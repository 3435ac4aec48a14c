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

// Scenario description and the built-in urban use-case families:
//   a  static object in the ego lane                      (9 variations)
//   b  a plus an oncoming vehicle in the opposite lane    (108 variations)
//   c  pedestrian crossing from the left                  (96 variations)
//   d  pedestrian crossing from the right                 (96 variations)

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctxplan/risk_field.hpp"

namespace ctxplan::sim {

using field::Cubic;
using field::LineType;
using field::ObjectClass;

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LaneSpec {
  std::string id;
  Cubic centerline;
  double width = 3.5;
  int direction = 1;  // +1 along the ego's travel direction, -1 opposite
};

struct MarkingSpec {
  std::string id;
  LineType type = LineType::kDashed;
  Cubic polynomial;
  std::string left_of;   // lane this marking bounds on its left, if any
  std::string right_of;  // lane this marking bounds on its right, if any
};

struct ActorSpec {
  std::int64_t id = 0;
  ObjectClass object_class = ObjectClass::kArtObject;
  std::string label;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;
};

struct Scenario {
  std::string id;
  std::string family;
  std::vector<LaneSpec> lanes;
  std::vector<MarkingSpec> markings;
  std::vector<ActorSpec> actors;
  std::string ego_lane = "right";
  double v_ref = 25.0 / 3.0;  // 30 km/h
  double goal_distance = 130.0;
  double duration_cap = 60.0;
  std::uint64_t seed = 0;

  const LaneSpec& lane(const std::string& lane_id) const {
    for (const auto& l : lanes) {
      if (l.id == lane_id) return l;
    }
    throw ScenarioError("unknown lane: " + lane_id);
  }

  void Validate() const {
    if (id.empty()) throw ScenarioError("scenario without id");
    if (lanes.empty()) throw ScenarioError("scenario without lanes");
    for (const auto& l : lanes) {
      if (!(l.width > 0)) throw ScenarioError("lane width must be positive");
    }
    lane(ego_lane);
    for (const auto& m : markings) {
      if (!m.left_of.empty()) lane(m.left_of);
      if (!m.right_of.empty()) lane(m.right_of);
    }
    for (std::size_t i = 0; i < actors.size(); ++i) {
      const auto& a = actors[i];
      if (!(a.length > 0 && a.width > 0 && a.height > 0)) {
        throw ScenarioError("actor dimensions must be positive");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (actors[j].id == a.id) throw ScenarioError("duplicate actor id");
      }
    }
    if (!(goal_distance > 0) || !(duration_cap > 0) || !(v_ref > 0)) {
      throw ScenarioError("goal distance, duration cap and v_ref must be positive");
    }
  }
};

inline constexpr double kLaneWidth = 3.5;

/// Two-lane two-way road along +x: the ego lane centered on y = 0, the
/// opposite lane to its left, solid outer lines and a dashed center line.
inline Scenario TwoLaneRoad(std::string id, std::string family) {
  Scenario s;
  s.id = std::move(id);
  s.family = std::move(family);
  s.lanes = {{"right", Cubic{{0, 0, 0, 0}}, kLaneWidth, 1},
             {"left", Cubic{{kLaneWidth, 0, 0, 0}}, kLaneWidth, -1}};
  s.markings = {
      {"right_edge", LineType::kSolid, Cubic{{-0.5 * kLaneWidth, 0, 0, 0}}, "", "right"},
      {"center", LineType::kDashed, Cubic{{0.5 * kLaneWidth, 0, 0, 0}}, "right", "left"},
      {"left_edge", LineType::kSolid, Cubic{{1.5 * kLaneWidth, 0, 0, 0}}, "left", ""},
  };
  return s;
}

inline ActorSpec StaticObstacle(int type_index, double x) {
  switch (type_index) {
    case 0: return {1, ObjectClass::kCar, "car", x, -1.1, 0.0, 0.0, 4.5, 1.8, 1.5};
    case 1: return {1, ObjectClass::kArtObject, "glass_bin", x, -1.0, 0.0, 0.0, 0.6, 0.6, 1.1};
    default: return {1, ObjectClass::kArtObject, "cardboard_box", x, 0.0, 0.0, 0.0, 0.3, 0.3, 0.3};
  }
}

inline constexpr double kObstaclePositions[3] = {20.0, 30.0, 40.0};
inline constexpr const char* kObstacleTypes[3] = {"car", "glass_bin", "cardboard_box"};
inline constexpr double kOncomingStarts[4] = {40.0, 60.0, 80.0, 100.0};
inline constexpr double kOncomingSpeeds[3] = {5.5, 8.25, 11.0};
inline constexpr double kPedestrianLateral[2] = {3.0, 4.0};
inline constexpr double kPedestrianLongitudinal[4] = {25.0, 35.0, 45.0, 55.0};
inline constexpr double kPedestrianHeadingDeg[3] = {80.0, 90.0, 100.0};
inline constexpr double kPedestrianSpeeds[4] = {1.0, 1.4, 1.8, 2.2};

inline std::string VariationId(char family, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c-%03d", family, index);
  return buf;
}

inline std::vector<Scenario> FamilyA() {
  std::vector<Scenario> out;
  for (int type = 0; type < 3; ++type) {
    for (double x : kObstaclePositions) {
      Scenario s = TwoLaneRoad(VariationId('a', static_cast<int>(out.size())), "a");
      s.actors.push_back(StaticObstacle(type, x));
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline std::vector<Scenario> FamilyB() {
  std::vector<Scenario> out;
  for (int type = 0; type < 3; ++type) {
    for (double x : kObstaclePositions) {
      for (double start : kOncomingStarts) {
        for (double speed : kOncomingSpeeds) {
          Scenario s = TwoLaneRoad(VariationId('b', static_cast<int>(out.size())), "b");
          s.actors.push_back(StaticObstacle(type, x));
          s.actors.push_back({2, ObjectClass::kCar, "oncoming_car", start, kLaneWidth,
                              std::numbers::pi, speed, 4.5, 1.8, 1.5});
          out.push_back(std::move(s));
        }
      }
    }
  }
  return out;
}

/// Pedestrian families. from_left: starts beyond the left road edge walking
/// toward -y; otherwise beyond the right edge walking toward +y.
inline std::vector<Scenario> PedestrianFamily(bool from_left) {
  const char family = from_left ? 'c' : 'd';
  std::vector<Scenario> out;
  for (double lateral : kPedestrianLateral) {
    for (double x : kPedestrianLongitudinal) {
      for (double heading_deg : kPedestrianHeadingDeg) {
        for (double speed : kPedestrianSpeeds) {
          Scenario s = TwoLaneRoad(VariationId(family, static_cast<int>(out.size())),
                                   std::string(1, family));
          const double heading = heading_deg * std::numbers::pi / 180.0;
          const double y = from_left ? 1.5 * kLaneWidth + lateral : -0.5 * kLaneWidth - lateral;
          s.actors.push_back({1, ObjectClass::kPedestrian, "pedestrian", x, y,
                              from_left ? -heading : heading, speed, 0.5, 0.5, 1.8});
          out.push_back(std::move(s));
        }
      }
    }
  }
  return out;
}

inline std::vector<Scenario> FamilyC() { return PedestrianFamily(true); }
inline std::vector<Scenario> FamilyD() { return PedestrianFamily(false); }

inline Scenario EmptyScenario() { return TwoLaneRoad("empty", "empty"); }

/// Resolves "a".."d", "all" or "empty".
inline std::vector<Scenario> BuiltinFamily(const std::string& name) {
  if (name == "a") return FamilyA();
  if (name == "b") return FamilyB();
  if (name == "c") return FamilyC();
  if (name == "d") return FamilyD();
  if (name == "empty") return {EmptyScenario()};
  if (name == "all") {
    std::vector<Scenario> all;
    for (auto fam : {FamilyA, FamilyB, FamilyC, FamilyD}) {
      auto part = fam();
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  throw ScenarioError("unknown built-in family: " + name);
}

}  // namespace ctxplan::sim
