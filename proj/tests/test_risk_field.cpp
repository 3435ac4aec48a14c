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

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ctxplan/risk_field.hpp"
#include "ctxplan/sim_harness.hpp"

namespace ctxplan::field {
namespace {

const double kHalf = std::exp(-0.5);

TEST(MarkingParamsFor, AllRows) {
  struct Row {
    LineType type;
    int acceptability;
    double amplitude;
  };
  for (const Row& r : {Row{LineType::kSolid, 0, 4.0}, Row{LineType::kSolid, 1, 0.0},
                       Row{LineType::kDashed, 0, 1.5}, Row{LineType::kDashed, 1, 0.0}}) {
    const auto p = MarkingParamsFor(r.type, r.acceptability);
    EXPECT_EQ(p.amplitude, r.amplitude);
    EXPECT_EQ(p.sigma, 0.6);
  }
}

TEST(ObjectParamsFor, AllRows) {
  struct Row {
    ObjectClass cls;
    RiskLevel risk;
    double amplitude;
    double offset;
  };
  const Row rows[] = {
      {ObjectClass::kCar, RiskLevel::kLow, 2, 0.05},
      {ObjectClass::kCar, RiskLevel::kMedium, 3, 0.1},
      {ObjectClass::kCar, RiskLevel::kHigh, 4, 0.3},
      {ObjectClass::kArtObject, RiskLevel::kLow, 1, 0.2},
      {ObjectClass::kArtObject, RiskLevel::kMedium, 2, 0.25},
      {ObjectClass::kArtObject, RiskLevel::kHigh, 3, 0.4},
      {ObjectClass::kPedestrian, RiskLevel::kLow, 2, 1.2},
      {ObjectClass::kPedestrian, RiskLevel::kMedium, 3, 1.7},
      {ObjectClass::kPedestrian, RiskLevel::kHigh, 4, 2.2},
  };
  for (const auto& r : rows) {
    for (double l : {0.3, 0.5, 4.5}) {
      for (double w : {0.3, 1.8}) {
        const auto p = ObjectParamsFor(r.cls, r.risk, l, w);
        EXPECT_EQ(p.amplitude, r.amplitude);
        EXPECT_EQ(p.sigma_x, 1.5 * l + r.offset);
        EXPECT_EQ(p.sigma_y, 1.2 * w + r.offset);
      }
    }
  }
}

TEST(ObjectParamsFor, Examples) {
  auto car = ObjectParamsFor(ObjectClass::kCar, RiskLevel::kHigh, 4, 2);
  EXPECT_DOUBLE_EQ(car.sigma_x, 6.3);
  EXPECT_DOUBLE_EQ(car.sigma_y, 2.7);
  auto ped = ObjectParamsFor(ObjectClass::kPedestrian, RiskLevel::kMedium, 0.5, 0.5);
  EXPECT_EQ(ped.amplitude, 3);
  EXPECT_DOUBLE_EQ(ped.sigma_x, 2.45);
  EXPECT_DOUBLE_EQ(ped.sigma_y, 2.3);
  auto box = ObjectParamsFor(ObjectClass::kArtObject, RiskLevel::kLow, 0.3, 0.3);
  EXPECT_EQ(box.amplitude, 1);
  EXPECT_DOUBLE_EQ(box.sigma_x, 0.65);
  EXPECT_DOUBLE_EQ(box.sigma_y, 0.56);
}

ObjectField MakeObject(double theta) {
  ObjectField f;
  f.amplitude = 3.0;
  f.sigma_x = 2.0;
  f.sigma_y = 0.8;
  f.centers = {{5.0, 1.0, theta}};
  return f;
}

TEST(ObjectField, Examples) {
  const ObjectField f = MakeObject(0.0);
  EXPECT_DOUBLE_EQ(f.Eval(0, 5.0, 1.0), 3.0);
  EXPECT_NEAR(f.Eval(0, 7.0, 1.0), 3.0 * kHalf, 1e-15);
  EXPECT_NEAR(f.Eval(0, 5.0, 1.8), 3.0 * kHalf, 1e-15);
  const ObjectField r = MakeObject(std::numbers::pi / 2);
  EXPECT_NEAR(r.Eval(0, 5.0, 3.0), 3.0 * kHalf, 1e-15);
  EXPECT_THROW(f.Eval(1, 0, 0), std::out_of_range);
}

TEST(MarkingField, Examples) {
  MarkingField m;
  m.amplitude = 1.5;
  m.polynomial.c = {1.75, 0.01, -0.001, 1e-5};
  for (double x : {-5.0, 0.0, 12.0, 40.0}) {
    EXPECT_DOUBLE_EQ(m.Eval(x, m.polynomial(x)), 1.5);
    EXPECT_NEAR(m.Eval(x, m.polynomial(x) + 0.6), 1.5 * kHalf, 1e-14);
  }
  m.amplitude = 0.0;
  EXPECT_EQ(m.Eval(3.0, 1.75), 0.0);
}

RiskFieldSet RandomSet(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RiskFieldSet set;
  for (int i = 0; i < 3; ++i) {
    ObjectField o;
    o.amplitude = 4 * u(rng);
    o.sigma_x = 0.3 + 6 * u(rng);
    o.sigma_y = 0.3 + 3 * u(rng);
    o.centers = {{20 * u(rng), -3 + 6 * u(rng), -3 + 6 * u(rng)}};
    set.objects.push_back(o);
  }
  for (int i = 0; i < 2; ++i) {
    MarkingField m;
    m.amplitude = 4 * u(rng);
    m.polynomial.c = {-2 + 4 * u(rng), 0.05 * (u(rng) - 0.5), 0.002 * (u(rng) - 0.5),
                      2e-5 * (u(rng) - 0.5)};
    set.markings.push_back(m);
  }
  return set;
}

TEST(RiskFieldProperty, GradientMatchesCentralDifferences) {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const RiskFieldSet set = RandomSet(rng);
    const double x = 20 * u(rng), y = -4 + 8 * u(rng);
    const auto s = set.Sample(0, x, y);
    const double h = 1e-6;
    const double fx = (set.Eval(0, x + h, y) - set.Eval(0, x - h, y)) / (2 * h);
    const double fy = (set.Eval(0, x, y + h) - set.Eval(0, x, y - h)) / (2 * h);
    const double scale = std::max({std::hypot(fx, fy), 1e-3});
    EXPECT_LT(std::hypot(s.dx - fx, s.dy - fy) / scale, 1e-6) << i;
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(RiskFieldProperty, RotationInvariance) {
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    ObjectField f = MakeObject(2 * std::numbers::pi * u(rng));
    const double px = 10 * u(rng) - 5, py = 10 * u(rng) - 5;
    const double phi = 2 * std::numbers::pi * u(rng);
    ObjectField g = f;
    g.centers[0].theta += phi;
    const double cx = f.centers[0].x, cy = f.centers[0].y;
    const double rx = cx + std::cos(phi) * (px - cx) - std::sin(phi) * (py - cy);
    const double ry = cy + std::sin(phi) * (px - cx) + std::cos(phi) * (py - cy);
    EXPECT_NEAR(f.Eval(0, px, py), g.Eval(0, rx, ry), 1e-12);
  }
}

TEST(RiskFieldProperty, NonNegativeAndBounded) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const RiskFieldSet set = RandomSet(rng);
    const double v = set.Eval(0, 40 * u(rng) - 10, 16 * u(rng) - 8);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, set.AmplitudeSum() + 1e-12);
  }
}

TEST(RiskFieldSet, WeightsScaleTerms) {
  std::mt19937 rng(37);
  const RiskFieldSet set = RandomSet(rng);
  RiskFieldSet objects_only = set, markings_only = set;
  objects_only.markings.clear();
  markings_only.objects.clear();
  const auto s = set.Sample(0, 4.0, 0.5, 3.0, 0.5);
  EXPECT_NEAR(s.value, 3.0 * objects_only.Eval(0, 4.0, 0.5) + 0.5 * markings_only.Eval(0, 4.0, 0.5),
              1e-12);
}

// Scene graph with one parked car and two dashed markings, one acceptable.
TEST(BuildRiskFields, Composition) {
  kg::SceneGraph g;
  const auto car = g.AddEntity("car", {{"track_id", std::int64_t{7}},
                                       {"length", 4.5},
                                       {"width", 1.8},
                                       {"height", 1.5}});
  g.AddRelation("has_risk_level", {{"object", car}},
                {{"risk_level", std::string("medium")}, {"priority", std::int64_t{0}}});
  const auto ego = g.AddEntity("ego");
  for (int acc : {1, 0}) {
    const auto m = g.AddEntity("lane_marking", {{"lane_marking_type", std::string("dashed")},
                                                {"poly_c0", 1.75 * (acc ? -1 : 1)}});
    g.AddRelation("crossing_acceptability", {{"lane_marking", m}, {"ego", ego}},
                  {{"acceptability", std::int64_t{acc}}, {"priority", std::int64_t{0}}});
  }
  Predictions pred;
  pred[7] = std::vector<Pose2>(24, Pose2{30.0, -1.1, 0.0});
  const RiskFieldSet set = BuildRiskFields(g, pred, 23);
  ASSERT_EQ(set.objects.size(), 1u);
  EXPECT_EQ(set.objects[0].amplitude, 3.0);
  EXPECT_DOUBLE_EQ(set.objects[0].sigma_x, 1.5 * 4.5 + 0.1);
  ASSERT_EQ(set.markings.size(), 2u);
  EXPECT_EQ(set.markings[0].amplitude, 0.0);
  EXPECT_EQ(set.markings[1].amplitude, 1.5);
  EXPECT_EQ(set.markings[1].polynomial.c[0], 1.75);

  pred.clear();
  EXPECT_THROW(BuildRiskFields(g, pred, 23), InputError);
  pred[7] = std::vector<Pose2>(5);
  EXPECT_THROW(BuildRiskFields(g, pred, 23), InputError);
}

TEST(BuildRiskFields, EmptyScene) {
  kg::SceneGraph g;
  EXPECT_TRUE(BuildRiskFields(g, {}, 23).empty());
}

// Scenario-c scene with the pedestrian in the ego path: the rules block
// the center line and the pedestrian on a collision course is high risk.
TEST(BuildRiskFields, PedestrianCrossingScene) {
  using namespace ctxplan::sim;
  Scenario sc = FamilyC().front();
  SimParams params;
  EgoState ego;
  ego.v = 8.0;
  std::vector<ObjectTrack> tracks;
  for (const auto& a : sc.actors) tracks.push_back(ObjectTrack::FromSpec(a));
  ASSERT_EQ(tracks.size(), 1u);
  tracks[0].pose.x = 12.0;
  tracks[0].pose.y = 0.0;
  tracks[0].certainty = 0.6;
  const double p = TrackCollisionProbability(ego, params.planner.vehicle, tracks[0],
                                             params.collision, params.noise);
  ASSERT_GT(p, 0.05);
  auto snap = BuildSceneGraph(sc, ego, params.planner.vehicle, tracks, {p}, 23, 0.15, "right");
  rules::ApplyRules(snap.graph, rules::RuleSet::Default());
  Predictions pred;
  pred[tracks[0].id] = PredictConstantVelocity(tracks[0], 23, 0.15);
  const RiskFieldSet set = BuildRiskFields(snap.graph, pred, 23);
  ASSERT_EQ(set.objects.size(), 1u);
  EXPECT_EQ(set.objects[0].amplitude, 4.0);
  int dashed = 0;
  for (const auto& m : set.markings) {
    if (m.line_type == LineType::kDashed) {
      ++dashed;
      EXPECT_EQ(m.amplitude, 1.5);
    } else {
      EXPECT_EQ(m.amplitude, 4.0);
    }
  }
  EXPECT_EQ(dashed, 1);
}

TEST(WriteRaster, Layout) {
  RiskFieldSet set;
  set.objects.push_back(MakeObject(0.0));
  RasterGrid grid{0.0, 2.0, -1.0, 1.0, 1.0};
  std::ostringstream os;
  WriteRaster(os, set, 0, grid);
  std::istringstream in(os.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(os.str().substr(0, 10), "y\\x,0,1,2\n");
}

}  // namespace
}  // namespace ctxplan::field
