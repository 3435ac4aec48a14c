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

#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ctxplan/scene_graph.hpp"

namespace ctxplan::kg {
namespace {

TEST(Ontology, TreeRootedAtEntity) {
  const Ontology& o = Ontology::Default();
  int roots = 0;
  for (const auto& [name, type] : o.entity_types()) {
    if (!type.parent) {
      ++roots;
      EXPECT_EQ(name, "entity");
    } else {
      EXPECT_TRUE(o.IsEntityType(*type.parent)) << name;
      EXPECT_TRUE(o.IsA(name, "entity")) << name;
    }
  }
  EXPECT_EQ(roots, 1);
  for (const char* t : {"physical_entity", "object", "vehicle", "pedestrian", "vru",
                        "artificial_object", "road_part", "lane", "lane_marking", "ego"}) {
    EXPECT_TRUE(o.IsEntityType(t)) << t;
  }
  EXPECT_TRUE(o.IsA("car", "object"));
  EXPECT_TRUE(o.IsA("pedestrian", "vru"));
  EXPECT_FALSE(o.IsA("lane", "object"));
}

TEST(SceneGraph, AddEntityWithAttribute) {
  SceneGraph g;
  const NodeId m = g.AddEntity("lane_marking", {{"lane_marking_type", std::string("dashed")}});
  EXPECT_EQ(g.nodes().size(), 2u);
  EXPECT_EQ(g.edges().size(), 1u);
  EXPECT_EQ(g.edges()[0].from, m);
  EXPECT_EQ(g.edges()[0].label.kind, EdgeLabel::Kind::kOwns);
  EXPECT_EQ(std::get<std::string>(*g.Attribute(m, "lane_marking_type")), "dashed");
}

TEST(SceneGraph, AddPedestrian) {
  SceneGraph g;
  const NodeId p = g.AddEntity("pedestrian", {{"classification_certainty", 0.9}});
  EXPECT_DOUBLE_EQ(*g.NumberAttribute(p, "classification_certainty"), 0.9);
  EXPECT_TRUE(g.IsInstanceOf(p, "vru"));
}

TEST(SceneGraph, UnknownEntityTypeThrows) {
  SceneGraph g;
  EXPECT_THROW(g.AddEntity("spaceship"), OntologyError);
  EXPECT_THROW(g.AddEntity("car", {{"colour", std::string("red")}}), OntologyError);
  EXPECT_TRUE(g.nodes().empty());
}

TEST(SceneGraph, AddRelations) {
  SceneGraph g;
  const NodeId car = g.AddEntity("car");
  const NodeId lane = g.AddEntity("lane");
  const NodeId on = g.AddRelation("is_on", {{"physical", car}, {"road", lane}});
  EXPECT_EQ(g.RolePlayers(on).size(), 2u);
  EXPECT_EQ(g.RelationsOf(car, "is_on"), std::vector<NodeId>{on});

  const NodeId m = g.AddEntity("lane_marking");
  const NodeId e = g.AddEntity("ego");
  const NodeId acc = g.AddRelation("crossing_acceptability", {{"lane_marking", m}, {"ego", e}},
                                   {{"acceptability", std::int64_t{1}},
                                    {"priority", std::int64_t{0}}});
  EXPECT_EQ(*g.NumberAttribute(acc, "acceptability"), 1.0);
  EXPECT_TRUE(g.CheckIntegrity());
}

TEST(SceneGraph, MissingRoleTargetThrows) {
  SceneGraph g;
  EXPECT_THROW(g.AddRelation("is_on", {{"physical", NodeId{42}}}), GraphIntegrityError);
  EXPECT_THROW(g.AddRelation("likes", {}), OntologyError);
}

TEST(SceneGraph, MatchDashedMarking) {
  Pattern p;
  p.Add(Isa{"x", "lane_marking"})
      .Add(Has{"x", "lane_marking_type", CmpOp::kEq, std::string("dashed")});
  SceneGraph empty;
  EXPECT_TRUE(empty.Match(p).empty());

  SceneGraph g;
  const NodeId m = g.AddEntity("lane_marking", {{"lane_marking_type", std::string("dashed")}});
  g.AddEntity("lane_marking", {{"lane_marking_type", std::string("solid")}});
  const auto b = g.Match(p);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].at("x"), m);
}

TEST(SceneGraph, MatchNumericComparison) {
  SceneGraph g;
  const NodeId a = g.AddEntity("car", {{"collision_probability", 0.25}});
  g.AddEntity("pedestrian", {{"collision_probability", 0.1}});
  Pattern p;
  p.Add(Isa{"o", "object"}).Add(Has{"o", "collision_probability", CmpOp::kGt, 0.2});
  const auto b = g.Match(p);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].at("o"), a);
}

TEST(SceneGraph, NotExists) {
  SceneGraph g;
  const NodeId car = g.AddEntity("car");
  const NodeId lane = g.AddEntity("lane");
  const NodeId parked = g.AddEntity("car");
  g.AddRelation("is_on", {{"physical", car}, {"road", lane}});
  Pattern on;
  on.Add(Rel{"is_on", {{"physical", "c"}, {"road", "l"}}, ""});
  Pattern p;
  p.Add(Isa{"c", "car"}).NotExists(on);
  const auto b = g.Match(p);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].at("c"), parked);
}

TEST(SceneGraph, MalformedPatternThrows) {
  SceneGraph g;
  g.AddEntity("car");
  Pattern unknown_type;
  unknown_type.Add(Isa{"x", "spaceship"});
  EXPECT_THROW(g.Match(unknown_type), PatternError);
  Pattern unbound;
  unbound.Add(Has{"x", "length", CmpOp::kGt, 1.0});
  EXPECT_THROW(g.Match(unbound), PatternError);
}

TEST(SceneGraph, HighestPriorityRelation) {
  SceneGraph g;
  const NodeId m = g.AddEntity("lane_marking");
  const NodeId e = g.AddEntity("ego");
  EXPECT_FALSE(g.HighestPriorityRelation("crossing_acceptability", m));
  g.AddRelation("crossing_acceptability", {{"lane_marking", m}, {"ego", e}},
                {{"acceptability", std::int64_t{1}}, {"priority", std::int64_t{0}}});
  g.AddRelation("crossing_acceptability", {{"lane_marking", m}, {"ego", e}},
                {{"acceptability", std::int64_t{0}}, {"priority", std::int64_t{1}}});
  const auto best = g.HighestPriorityRelation("crossing_acceptability", m);
  ASSERT_TRUE(best);
  EXPECT_EQ(*AsNumber(best->attributes.at("acceptability")), 0.0);
  EXPECT_EQ(*AsNumber(best->attributes.at("priority")), 1.0);

  const NodeId o = g.AddEntity("car");
  g.AddRelation("has_risk_level", {{"object", o}},
                {{"risk_level", std::string("medium")}, {"priority", std::int64_t{0}}});
  EXPECT_EQ(std::get<std::string>(
                g.HighestPriorityRelation("has_risk_level", o)->attributes.at("risk_level")),
            "medium");
}

TEST(SceneGraph, TieResolvesToCautiousConclusion) {
  SceneGraph g;
  const NodeId m = g.AddEntity("lane_marking");
  const NodeId e = g.AddEntity("ego");
  g.AddRelation("crossing_acceptability", {{"lane_marking", m}, {"ego", e}},
                {{"acceptability", std::int64_t{1}}, {"priority", std::int64_t{2}}});
  g.AddRelation("crossing_acceptability", {{"lane_marking", m}, {"ego", e}},
                {{"acceptability", std::int64_t{0}}, {"priority", std::int64_t{2}}});
  EXPECT_EQ(*AsNumber(g.HighestPriorityRelation("crossing_acceptability", m)
                          ->attributes.at("acceptability")),
            0.0);

  const NodeId o = g.AddEntity("pedestrian");
  for (const char* level : {"low", "high", "medium"}) {
    g.AddRelation("has_risk_level", {{"object", o}},
                  {{"risk_level", std::string(level)}, {"priority", std::int64_t{1}}});
  }
  EXPECT_EQ(std::get<std::string>(
                g.HighestPriorityRelation("has_risk_level", o)->attributes.at("risk_level")),
            "high");
}

TEST(SceneGraph, DumpListsNodesAndEdges) {
  SceneGraph g;
  g.AddEntity("car", {{"length", 4.5}});
  std::ostringstream os;
  g.Dump(os);
  EXPECT_NE(os.str().find("nodes 2"), std::string::npos);
  EXPECT_NE(os.str().find("edges 1"), std::string::npos);
  EXPECT_NE(os.str().find("owns"), std::string::npos);
}

// Random mutation sequences: integrity holds, generation grows with every
// mutation and not with queries.
TEST(SceneGraphProperty, IntegrityAndGeneration) {
  std::mt19937 rng(7);
  const std::vector<std::string> types = {"car", "pedestrian", "artificial_object", "lane",
                                          "lane_marking", "ego"};
  for (int trial = 0; trial < 50; ++trial) {
    SceneGraph g;
    std::vector<NodeId> entities;
    for (int op = 0; op < 40; ++op) {
      const auto before = g.generation();
      const bool relation = !entities.empty() && rng() % 2;
      if (relation) {
        const NodeId a = entities[rng() % entities.size()];
        const NodeId b = entities[rng() % entities.size()];
        g.AddRelation("is_on", {{"physical", a}, {"road", b}},
                      {{"priority", std::int64_t(rng() % 5)}});
      } else {
        entities.push_back(g.AddEntity(types[rng() % types.size()],
                                       {{"x", double(rng() % 100)}}));
      }
      EXPECT_GT(g.generation(), before);
      const auto after = g.generation();
      Pattern p;
      p.Add(Isa{"o", "object"});
      (void)g.Match(p);
      (void)g.InstancesOf("lane");
      EXPECT_EQ(g.generation(), after);
      std::string why;
      ASSERT_TRUE(g.CheckIntegrity(&why)) << why;
    }
  }
}

// Positive patterns only gain bindings when unrelated nodes are added.
TEST(SceneGraphProperty, MatchMonotoneUnderAdditions) {
  std::mt19937 rng(11);
  Pattern p;
  p.Add(Isa{"o", "object"})
      .Add(Has{"o", "distance", CmpOp::kLt, 50.0})
      .Add(Rel{"is_on", {{"physical", "o"}, {"road", "l"}}, ""});
  SceneGraph g;
  std::vector<NodeId> lanes{g.AddEntity("lane"), g.AddEntity("lane")};
  std::vector<Binding> previous;
  for (int step = 0; step < 60; ++step) {
    const NodeId o = g.AddEntity(rng() % 2 ? "car" : "pedestrian",
                                 {{"distance", double(rng() % 100)}});
    if (rng() % 3) g.AddRelation("is_on", {{"physical", o}, {"road", lanes[rng() % 2]}});
    const auto now = g.Match(p);
    for (const auto& b : previous) {
      EXPECT_NE(std::find(now.begin(), now.end(), b), now.end());
    }
    previous = now;
  }
}

// The winner does not depend on the order the relations were inserted in.
TEST(SceneGraphProperty, PriorityInvariantToInsertionOrder) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<int, int>> rels;  // (acceptability, priority)
    const int n = 1 + rng() % 6;
    for (int i = 0; i < n; ++i) rels.emplace_back(rng() % 2, rng() % 5);
    std::optional<std::pair<double, double>> reference;
    for (int perm = 0; perm < 5; ++perm) {
      std::shuffle(rels.begin(), rels.end(), rng);
      SceneGraph g;
      const NodeId m = g.AddEntity("lane_marking");
      const NodeId e = g.AddEntity("ego");
      for (auto [acc, prio] : rels) {
        g.AddRelation("crossing_acceptability", {{"lane_marking", m}, {"ego", e}},
                      {{"acceptability", std::int64_t{acc}}, {"priority", std::int64_t{prio}}});
      }
      const auto best = g.HighestPriorityRelation("crossing_acceptability", m);
      const std::pair<double, double> got{*AsNumber(best->attributes.at("acceptability")),
                                          *AsNumber(best->attributes.at("priority"))};
      if (!reference) reference = got;
      EXPECT_EQ(got, *reference);
    }
  }
}

}  // namespace
}  // namespace ctxplan::kg
