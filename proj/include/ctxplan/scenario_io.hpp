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

// JSON scenario files. See docs/scenario_format.md for the schema.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctxplan/scenario.hpp"

namespace ctxplan::sim {

namespace io_detail {

using nlohmann::json;

inline Cubic ReadCubic(const json& j, const char* what) {
  if (!j.is_array() || j.size() > 4 || j.empty()) {
    throw ScenarioError(std::string(what) + " must be an array of 1 to 4 coefficients");
  }
  Cubic c;
  for (std::size_t i = 0; i < j.size(); ++i) c.c[i] = j[i].get<double>();
  return c;
}

inline json WriteCubic(const Cubic& c) { return json::array({c.c[0], c.c[1], c.c[2], c.c[3]}); }

inline ObjectClass ReadClass(const std::string& s) {
  if (s == "car") return ObjectClass::kCar;
  if (s == "pedestrian") return ObjectClass::kPedestrian;
  if (s == "artificial_object") return ObjectClass::kArtObject;
  throw ScenarioError("unknown actor class: " + s);
}

inline LineType ReadLineType(const std::string& s) {
  if (s == "solid") return LineType::kSolid;
  if (s == "dashed") return LineType::kDashed;
  throw ScenarioError("unknown marking type: " + s);
}

template <typename T>
T Get(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->template get<T>();
}

template <typename T>
T Require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(std::string("missing field: ") + key);
  return it->template get<T>();
}

inline Scenario ReadScenario(const json& j) {
  if (!j.is_object()) throw ScenarioError("scenario must be a JSON object");
  Scenario s;
  s.id = Require<std::string>(j, "id");
  s.family = Get<std::string>(j, "family", "custom");
  for (const auto& l : Require<json>(j, "lanes")) {
    LaneSpec lane;
    lane.id = Require<std::string>(l, "id");
    lane.centerline = ReadCubic(Require<json>(l, "centerline"), "centerline");
    lane.width = Get<double>(l, "width", kLaneWidth);
    lane.direction = Get<int>(l, "direction", 1);
    s.lanes.push_back(lane);
  }
  if (auto it = j.find("markings"); it != j.end()) {
    for (const auto& m : *it) {
      MarkingSpec mark;
      mark.id = Require<std::string>(m, "id");
      mark.type = ReadLineType(Require<std::string>(m, "type"));
      mark.polynomial = ReadCubic(Require<json>(m, "polynomial"), "polynomial");
      mark.left_of = Get<std::string>(m, "left_of", "");
      mark.right_of = Get<std::string>(m, "right_of", "");
      s.markings.push_back(mark);
    }
  }
  if (auto it = j.find("actors"); it != j.end()) {
    for (const auto& a : *it) {
      ActorSpec actor;
      actor.id = Require<std::int64_t>(a, "id");
      actor.object_class = ReadClass(Require<std::string>(a, "class"));
      actor.label = Get<std::string>(a, "label", "");
      actor.x = Require<double>(a, "x");
      actor.y = Require<double>(a, "y");
      actor.heading = Get<double>(a, "heading", 0.0);
      actor.speed = Get<double>(a, "speed", 0.0);
      actor.length = Require<double>(a, "length");
      actor.width = Require<double>(a, "width");
      actor.height = Require<double>(a, "height");
      s.actors.push_back(actor);
    }
  }
  s.ego_lane = Get<std::string>(j, "ego_lane", "right");
  s.v_ref = Get<double>(j, "v_ref", s.v_ref);
  s.goal_distance = Get<double>(j, "goal_distance", s.goal_distance);
  s.duration_cap = Get<double>(j, "duration_cap", s.duration_cap);
  if (auto it = j.find("seeds"); it != j.end() && it->is_array() && !it->empty()) {
    s.seed = (*it)[0].get<std::uint64_t>();
  } else {
    s.seed = Get<std::uint64_t>(j, "seed", 0);
  }
  s.Validate();
  return s;
}

}  // namespace io_detail

inline nlohmann::json ToJson(const Scenario& s) {
  using nlohmann::json;
  json j;
  j["id"] = s.id;
  j["family"] = s.family;
  j["lanes"] = json::array();
  for (const auto& l : s.lanes) {
    j["lanes"].push_back({{"id", l.id},
                          {"centerline", io_detail::WriteCubic(l.centerline)},
                          {"width", l.width},
                          {"direction", l.direction}});
  }
  j["markings"] = json::array();
  for (const auto& m : s.markings) {
    j["markings"].push_back({{"id", m.id},
                             {"type", m.type == LineType::kSolid ? "solid" : "dashed"},
                             {"polynomial", io_detail::WriteCubic(m.polynomial)},
                             {"left_of", m.left_of},
                             {"right_of", m.right_of}});
  }
  j["actors"] = json::array();
  for (const auto& a : s.actors) {
    j["actors"].push_back({{"id", a.id},
                           {"class", field::ToString(a.object_class)},
                           {"label", a.label},
                           {"x", a.x},
                           {"y", a.y},
                           {"heading", a.heading},
                           {"speed", a.speed},
                           {"length", a.length},
                           {"width", a.width},
                           {"height", a.height}});
  }
  j["ego_lane"] = s.ego_lane;
  j["v_ref"] = s.v_ref;
  j["goal_distance"] = s.goal_distance;
  j["duration_cap"] = s.duration_cap;
  j["seeds"] = json::array({s.seed});
  return j;
}

/// Parses one scenario object or an array of them.
inline std::vector<Scenario> ParseScenarios(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(std::string("invalid JSON: ") + e.what());
  }
  std::vector<Scenario> out;
  try {
    if (j.is_array()) {
      for (const auto& item : j) out.push_back(io_detail::ReadScenario(item));
    } else {
      out.push_back(io_detail::ReadScenario(j));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  }
  return out;
}

inline std::vector<Scenario> LoadScenarios(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseScenarios(buf.str());
}

}  // namespace ctxplan::sim
