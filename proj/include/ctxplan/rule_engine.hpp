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

// Forward chaining of prioritized default rules over the scene graph. Each
// rule inserts a relation carrying its priority; readers take the
// highest-priority conclusion.

#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctxplan/scene_graph.hpp"

namespace ctxplan::rules {

using kg::Binding;
using kg::CmpOp;
using kg::Has;
using kg::Isa;
using kg::NodeId;
using kg::Pattern;
using kg::Rel;
using kg::SceneGraph;

class FixpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RuleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Relation to insert for every body binding.
struct RuleHead {
  std::string relation_type;
  std::vector<std::pair<std::string, std::string>> roles;  // role -> body variable
  kg::AttributeList attributes;                            // without priority
};

struct Rule {
  std::string name;
  int priority = 0;
  Pattern body;
  RuleHead head;

  /// Head attributes with the rule priority appended.
  kg::AttributeList HeadAttributes() const {
    kg::AttributeList attrs = head.attributes;
    attrs.emplace_back("priority", std::int64_t{priority});
    return attrs;
  }
};

namespace detail {

inline void CollectPositiveVars(const Pattern& p, std::set<std::string>& vars) {
  for (const auto& c : p.conjuncts) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Isa>) {
            vars.insert(x.var);
          } else if constexpr (std::is_same_v<T, Rel>) {
            for (const auto& [role, var] : x.roles) vars.insert(var);
            if (!x.var.empty()) vars.insert(x.var);
          }
        },
        c);
  }
}

}  // namespace detail

class RuleSet {
 public:
  RuleSet() = default;
  explicit RuleSet(std::vector<Rule> rules) {
    for (auto& r : rules) Add(std::move(r));
  }

  void Add(Rule rule) {
    if (rule.priority < 0) throw RuleError("negative priority in rule " + rule.name);
    for (const auto& r : rules_) {
      if (r.name == rule.name) throw RuleError("duplicate rule name " + rule.name);
    }
    for (const auto& [name, value] : rule.head.attributes) {
      if (name == "priority") {
        throw RuleError("head priority is implied by the rule: " + rule.name);
      }
    }
    std::set<std::string> vars;
    detail::CollectPositiveVars(rule.body, vars);
    for (const auto& [role, var] : rule.head.roles) {
      if (!vars.contains(var)) {
        throw RuleError("head variable '" + var + "' unbound in rule " + rule.name);
      }
    }
    rules_.push_back(std::move(rule));
  }

  const std::vector<Rule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }

  /// The traffic rule base: six crossing-acceptability rules and four object
  /// risk-level rules.
  static RuleSet Default();

 private:
  std::vector<Rule> rules_;
};

namespace detail {

// Bodies shared by the crossing-acceptability rules; x = marking, e = ego.
inline Pattern DashedMarking() {
  Pattern p;
  p.Add(Isa{"x", "lane_marking"})
      .Add(Isa{"e", "ego"})
      .Add(Has{"x", "lane_marking_type", CmpOp::kEq, std::string("dashed")});
  return p;
}

inline Pattern DashedLeftOfEgoLane() {
  Pattern p = DashedMarking();
  p.Add(Rel{"is_on", {{"physical", "e"}, {"road", "l"}}, ""})
      .Add(Rel{"lane_boundary", {{"marking", "x"}, {"lane", "l"}}, "b"})
      .Add(Has{"b", "side", CmpOp::kEq, std::string("left")});
  return p;
}

inline RuleHead Acceptability(int value) {
  return {"crossing_acceptability",
          {{"lane_marking", "x"}, {"ego", "e"}},
          {{"acceptability", std::int64_t{value}}}};
}

inline RuleHead Risk(const char* level) {
  return {"has_risk_level", {{"object", "o"}}, {{"risk_level", std::string(level)}}};
}

}  // namespace detail

inline RuleSet RuleSet::Default() {
  using detail::Acceptability;
  using detail::Risk;
  std::vector<Rule> rules;

  rules.push_back({"dashed_line_crossable", 0, detail::DashedMarking(), Acceptability(1)});
  {
    Pattern p;
    p.Add(Isa{"x", "lane_marking"})
        .Add(Isa{"e", "ego"})
        .Add(Has{"x", "lane_marking_type", CmpOp::kEq, std::string("solid")});
    rules.push_back({"solid_line_not_crossable", 0, p, Acceptability(0)});
  }
  rules.push_back(
      {"dashed_left_line_not_crossable", 1, detail::DashedLeftOfEgoLane(), Acceptability(0)});
  {
    Pattern p = detail::DashedLeftOfEgoLane();
    p.Add(Isa{"o", "object"})
        .Add(Rel{"is_on", {{"physical", "o"}, {"road", "l"}}, ""})
        .Add(Has{"o", "longitudinal_offset", CmpOp::kGt, 0.0})
        .Add(Has{"o", "distance", CmpOp::kLt, 20.0});
    rules.push_back({"dashed_left_line_crossable_object_ahead", 2, p, Acceptability(1)});
  }
  {
    Pattern p = detail::DashedLeftOfEgoLane();
    p.Add(Rel{"lane_boundary", {{"marking", "x"}, {"lane", "m"}}, "c"})
        .Add(Has{"c", "side", CmpOp::kEq, std::string("right")})
        .Add(Isa{"v", "vehicle"})
        .Add(Rel{"is_on", {{"physical", "v"}, {"road", "m"}}, ""})
        .Add(Has{"v", "oncoming", CmpOp::kEq, true})
        .Add(Has{"v", "distance", CmpOp::kLt, 50.0});
    rules.push_back({"dashed_left_line_not_crossable_oncoming", 3, p, Acceptability(0)});
  }
  {
    Pattern p = detail::DashedMarking();
    p.Add(Isa{"p", "vru"}).Add(Rel{"is_crossing", {{"vru", "p"}, {"road", "r"}}, ""});
    rules.push_back({"dashed_line_not_crossable_vru_crossing", 4, p, Acceptability(0)});
  }

  {
    Pattern p;
    p.Add(Isa{"o", "object"});
    rules.push_back({"object_medium_risk", 0, p, Risk("medium")});
  }
  {
    Pattern p;
    p.Add(Isa{"o", "artificial_object"})
        .Add(Has{"o", "classification_certainty", CmpOp::kGt, 0.8})
        .Add(Has{"o", "length", CmpOp::kLt, 0.4})
        .Add(Has{"o", "width", CmpOp::kLt, 0.4})
        .Add(Has{"o", "height", CmpOp::kLt, 0.4});
    rules.push_back({"small_artificial_object_low_risk", 1, p, Risk("low")});
  }
  {
    Pattern p;
    p.Add(Isa{"o", "vru"})
        .Add(Has{"o", "classification_certainty", CmpOp::kGt, 0.05})
        .Add(Has{"o", "collision_probability", CmpOp::kGt, 0.05});
    rules.push_back({"vru_on_collision_course_high_risk", 2, p, Risk("high")});
  }
  {
    Pattern p;
    p.Add(Isa{"o", "object"}).Add(Has{"o", "collision_probability", CmpOp::kGt, 0.2});
    rules.push_back({"likely_collision_high_risk", 3, p, Risk("high")});
  }
  return RuleSet(std::move(rules));
}

namespace detail {

// True if a relation with exactly these players and head attributes exists.
inline bool HeadPresent(const SceneGraph& g, const std::string& type,
                        const kg::RoleList& players, const kg::AttributeList& attrs) {
  if (players.empty()) return false;
  auto sorted_players = players;
  std::sort(sorted_players.begin(), sorted_players.end());
  for (NodeId rel : g.RelationsOf(players.front().second, type)) {
    auto existing = g.RolePlayers(rel);
    std::sort(existing.begin(), existing.end());
    if (existing != sorted_players) continue;
    bool same = true;
    for (const auto& [name, value] : attrs) {
      auto v = g.Attribute(rel, name);
      if (!v || !kg::Compare(*v, CmpOp::kEq, value)) {
        same = false;
        break;
      }
    }
    if (same) return true;
  }
  return false;
}

}  // namespace detail

inline constexpr int kMaxSweeps = 100;

/// Runs the rules to fixpoint, lowest priority first within each sweep, and
/// returns the number of relations inserted.
inline std::size_t ApplyRules(SceneGraph& graph, const RuleSet& rules) {
  std::vector<const Rule*> order;
  for (const auto& r : rules.rules()) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(),
                   [](const Rule* a, const Rule* b) { return a->priority < b->priority; });

  std::size_t inserted = 0;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    std::size_t this_sweep = 0;
    for (const Rule* rule : order) {
      const auto attrs = rule->HeadAttributes();
      for (const Binding& b : graph.Match(rule->body)) {
        kg::RoleList players;
        for (const auto& [role, var] : rule->head.roles) players.emplace_back(role, b.at(var));
        if (detail::HeadPresent(graph, rule->head.relation_type, players, attrs)) continue;
        graph.AddRelation(rule->head.relation_type, players, attrs);
        ++this_sweep;
      }
    }
    inserted += this_sweep;
    if (this_sweep == 0) return inserted;
  }
  throw FixpointError("rule application did not reach a fixpoint");
}

struct AcceptabilityResult {
  int acceptability = 0;
  int priority = 0;
  NodeId relation;
};

/// Resolved crossing acceptability of a marking. Every marking is covered by a
/// priority-0 rule, so a missing conclusion means the rules were not applied.
inline AcceptabilityResult CrossingAcceptability(const SceneGraph& graph, NodeId marking) {
  auto rel = graph.HighestPriorityRelation("crossing_acceptability", marking);
  if (!rel) throw std::logic_error("no crossing_acceptability for marking; apply rules first");
  return {static_cast<int>(kg::AsNumber(rel->attributes.at("acceptability")).value()),
          static_cast<int>(kg::AsNumber(rel->attributes.at("priority")).value()), rel->id};
}

enum class RiskLevel { kLow, kMedium, kHigh };

inline const char* ToString(RiskLevel r) {
  switch (r) {
    case RiskLevel::kLow: return "low";
    case RiskLevel::kMedium: return "medium";
    case RiskLevel::kHigh: return "high";
  }
  return "?";
}

inline RiskLevel ParseRiskLevel(const std::string& s) {
  if (s == "low") return RiskLevel::kLow;
  if (s == "medium") return RiskLevel::kMedium;
  if (s == "high") return RiskLevel::kHigh;
  throw std::invalid_argument("unknown risk level: " + s);
}

struct RiskResult {
  RiskLevel level = RiskLevel::kMedium;
  int priority = 0;
  NodeId relation;
};

inline RiskResult RiskLevelOf(const SceneGraph& graph, NodeId object) {
  auto rel = graph.HighestPriorityRelation("has_risk_level", object);
  if (!rel) throw std::logic_error("no has_risk_level for object; apply rules first");
  return {ParseRiskLevel(std::get<std::string>(rel->attributes.at("risk_level"))),
          static_cast<int>(kg::AsNumber(rel->attributes.at("priority")).value()), rel->id};
}

/// One tab-separated line per marking and object: every inferred relation as
/// value@priority, then the resolved winner.
inline void WriteRuleTrace(std::ostream& os, const SceneGraph& graph, double time) {
  auto line = [&](const char* kind, NodeId id, const std::string& rel_type,
                  const std::string& value_attr) {
    os << time << '\t' << kind << '\t' << id.value << '\t';
    if (auto track = graph.Attribute(id, "track_id")) os << kg::ToString(*track);
    os << '\t';
    bool first = true;
    for (NodeId rel : graph.RelationsOf(id, rel_type)) {
      auto attrs = graph.Attributes(rel);
      if (!first) os << ';';
      first = false;
      os << kg::ToString(attrs.at(value_attr)) << '@' << kg::ToString(attrs.at("priority"));
    }
    os << '\t';
    if (auto win = graph.HighestPriorityRelation(rel_type, id)) {
      os << kg::ToString(win->attributes.at(value_attr)) << '@'
         << kg::ToString(win->attributes.at("priority"));
    } else {
      os << "none";
    }
    os << '\n';
  };
  for (NodeId m : graph.InstancesOf("lane_marking")) {
    line("marking", m, "crossing_acceptability", "acceptability");
  }
  for (NodeId o : graph.InstancesOf("object")) line("object", o, "has_risk_level", "risk_level");
}

}  // namespace ctxplan::rules
