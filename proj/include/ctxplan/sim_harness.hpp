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

// Closed-loop simulation: each planning cycle refreshes the scene graph,
// runs the rules, builds the risk fields and re-solves the planner; the plant
// integrates the kinematic model at a finer step while scripted actors move.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "ctxplan/collision_risk.hpp"
#include "ctxplan/geometry.hpp"
#include "ctxplan/nmpc_planner.hpp"
#include "ctxplan/risk_field.hpp"
#include "ctxplan/rule_engine.hpp"
#include "ctxplan/scenario.hpp"
#include "ctxplan/scene_graph.hpp"
#include "ctxplan/vehicle_dynamics.hpp"

namespace ctxplan::sim {

using field::Pose2;

struct ObjectTrack {
  std::int64_t id = 0;
  ObjectClass object_class = ObjectClass::kArtObject;
  std::string label;
  Pose2 pose;
  double speed = 0.0;
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;
  double certainty = 0.0;
  double time_in_scene = 0.0;

  geom::OrientedBox Box() const { return {{pose.x, pose.y}, pose.theta, length, width}; }

  static ObjectTrack FromSpec(const ActorSpec& a) {
    ObjectTrack t;
    t.id = a.id;
    t.object_class = a.object_class;
    t.label = a.label;
    t.pose = {a.x, a.y, a.heading};
    t.speed = a.speed;
    t.length = a.length;
    t.width = a.width;
    t.height = a.height;
    return t;
  }
};

/// Classifier certainty grows with observation time and proximity and never
/// decreases while the object stays observed.
struct CertaintyModel {
  double base = 0.3;
  double rate_time = 0.1;       // 1/s
  double rate_distance = 0.005;  // 1/m
  double reference_distance = 60.0;
  double cap = 0.99;

  double Update(ObjectTrack& track, double distance, double dt) const {
    track.time_in_scene += dt;
    const double raw = base + rate_time * track.time_in_scene +
                       rate_distance * std::max(0.0, reference_distance - distance);
    track.certainty = std::max(track.certainty, std::clamp(raw, 0.0, cap));
    return track.certainty;
  }
};

inline std::vector<Pose2> PredictConstantVelocity(const ObjectTrack& track, int horizon,
                                                  double ts) {
  std::vector<Pose2> out;
  out.reserve(horizon + 1);
  const double c = std::cos(track.pose.theta), s = std::sin(track.pose.theta);
  for (int k = 0; k <= horizon; ++k) {
    const double d = k * ts * track.speed;
    out.push_back({track.pose.x + d * c, track.pose.y + d * s, track.pose.theta});
  }
  return out;
}

inline geom::OrientedBox EgoBox(const EgoState& s, const VehicleParams& p) {
  const double off = p.CenterOffset();
  return {{s.x + off * std::cos(s.theta), s.y + off * std::sin(s.theta)},
          s.theta,
          p.length,
          p.width};
}

inline double BoundingBoxDistance(const EgoState& ego, const VehicleParams& params,
                                  const ObjectTrack& track) {
  return geom::BoxDistance(EgoBox(ego, params), track.Box());
}

/// P speed controller and PD lateral controller used in controller mode.
struct ControllerGains {
  double kp = 1.0;
  double kp_lateral = 0.5;
  double kd_lateral = 0.1;
};

inline double LongitudinalController(double v_measured, double v_planned,
                                     const ControllerGains& gains, const Bounds& bounds) {
  return std::clamp(gains.kp * (v_planned - v_measured), bounds.input_lower[0],
                    bounds.input_upper[0]);
}

inline double LateralController(double error, double error_rate, const ControllerGains& gains,
                                const Bounds& bounds) {
  return std::clamp(gains.kp_lateral * error + gains.kd_lateral * error_rate,
                    bounds.input_lower[1], bounds.input_upper[1]);
}

/// Observation noise assumed by the collision-probability estimate.
struct ObservationNoise {
  double var_x = 0.25;
  double var_y = 0.04;
  double var_psi = 0.0025;
  double var_wt = 0.04;
};

/// Observations of every face of the track the ego front is approaching: the
/// face lies ahead (x_bar > 0) and the ego course points into it.
inline std::vector<collision::EdgeObservation> ObserveEdges(const EgoState& ego,
                                                            const VehicleParams& params,
                                                            const ObjectTrack& track,
                                                            const ObservationNoise& noise) {
  std::vector<collision::EdgeObservation> out;
  const double front = params.length - params.rear_overhang;
  const geom::Vec2 heading{std::cos(ego.theta), std::sin(ego.theta)};
  const geom::Vec2 bumper = geom::Vec2{ego.x, ego.y} + heading * front;
  const geom::OrientedBox box = track.Box();
  const geom::Vec2 ax = box.Axis(), ny = box.Normal();
  struct Face {
    geom::Vec2 normal;
    geom::Vec2 tangent;
    double offset;
    double length;
  };
  const Face faces[4] = {{ax, ny, 0.5 * track.length, track.width},
                         {ax * -1.0, ny * -1.0, 0.5 * track.length, track.width},
                         {ny, ax * -1.0, 0.5 * track.width, track.length},
                         {ny * -1.0, ax, 0.5 * track.width, track.length}};
  for (const Face& f : faces) {
    const geom::Vec2 center = box.center + f.normal * f.offset;
    const geom::Vec2 rel = bumper - center;
    const double x_bar = rel.Dot(f.normal);
    const double closing = -heading.Dot(f.normal);
    if (!(x_bar > 0.0) || !(closing > 0.0)) continue;
    collision::EdgeObservation obs;
    obs.x_bar = x_bar;
    obs.y_bar = rel.Dot(f.tangent);
    obs.psi_bar = std::atan2(heading.Dot(f.tangent), closing);
    obs.w_t = f.length;
    obs.var_x = noise.var_x;
    obs.var_y = noise.var_y;
    obs.var_psi = noise.var_psi;
    obs.var_wt = noise.var_wt;
    out.push_back(obs);
  }
  return out;
}

/// Smoothed collision probability of the ego with a track, the maximum over
/// the approached faces. Overlapping boxes count as certain collision.
inline double TrackCollisionProbability(const EgoState& ego, const VehicleParams& params,
                                        const ObjectTrack& track,
                                        const collision::CollisionParams& cp,
                                        const ObservationNoise& noise) {
  if (geom::Overlap(EgoBox(ego, params), track.Box())) return 1.0;
  double best = 0.0;
  const double v = std::max(0.0, ego.v);
  for (const auto& obs : ObserveEdges(ego, params, track, noise)) {
    best = std::max(best, collision::SmoothedCollisionProbability(v, obs, cp));
  }
  return best;
}

inline bool InLane(const LaneSpec& lane, double x, double y) {
  return std::abs(y - lane.centerline(x)) <= 0.5 * lane.width;
}

inline const LaneSpec* LaneAt(const Scenario& sc, double x, double y) {
  for (const auto& l : sc.lanes) {
    if (InLane(l, x, y)) return &l;
  }
  return nullptr;
}

/// Road edges are markings that bound a lane on one side only. The corridor is
/// the band between them narrowed by margin. Empty when the road has no edge
/// on either side.
inline std::optional<nmpc::Corridor> RoadCorridor(const Scenario& sc, double margin) {
  const MarkingSpec* lower = nullptr;
  const MarkingSpec* upper = nullptr;
  for (const auto& m : sc.markings) {
    if (!m.right_of.empty() && m.left_of.empty() && !lower) lower = &m;
    if (!m.left_of.empty() && m.right_of.empty() && !upper) upper = &m;
  }
  if (!lower || !upper) return std::nullopt;
  nmpc::Corridor c{lower->polynomial, upper->polynomial};
  c.lower.c[0] += margin;
  c.upper.c[0] -= margin;
  return c;
}

enum class LanePolicy { kRearAxle, kFootprint };

/// Lane the ego occupies. kRearAxle: the lane containing the rear axle.
/// kFootprint: the ego changes lanes once its whole footprint lies in another
/// lane. Off the lanes, or straddling under kFootprint, it keeps `previous`.
inline std::string OccupiedLane(const Scenario& sc, const EgoState& ego,
                                const VehicleParams& params, const std::string& previous,
                                LanePolicy policy = LanePolicy::kFootprint) {
  if (policy == LanePolicy::kRearAxle) {
    const LaneSpec* l = LaneAt(sc, ego.x, ego.y);
    return l ? l->id : previous;
  }
  for (const auto& l : sc.lanes) {
    bool inside = true;
    for (const auto& c : EgoBox(ego, params).Corners()) inside = inside && InLane(l, c.x, c.y);
    if (inside) return l.id;
  }
  if (!previous.empty()) return previous;
  const LaneSpec* l = LaneAt(sc, ego.x, ego.y);
  return l ? l->id : std::string();
}

/// Constant-velocity path of a pedestrian enters a lane within the horizon.
inline bool IsCrossing(const Scenario& sc, const ObjectTrack& track, int horizon, double ts,
                       std::vector<const LaneSpec*>* lanes = nullptr) {
  if (track.object_class != ObjectClass::kPedestrian) return false;
  bool any = false;
  for (const auto& lane : sc.lanes) {
    for (const Pose2& p : PredictConstantVelocity(track, horizon, ts)) {
      if (InLane(lane, p.x, p.y)) {
        any = true;
        if (lanes) lanes->push_back(&lane);
        break;
      }
    }
  }
  return any;
}

inline const char* GraphType(ObjectClass c) {
  switch (c) {
    case ObjectClass::kCar: return "car";
    case ObjectClass::kPedestrian: return "pedestrian";
    case ObjectClass::kArtObject: return "artificial_object";
  }
  return "object";
}

struct SceneSnapshot {
  kg::SceneGraph graph;
  kg::NodeId ego;
  std::map<std::int64_t, kg::NodeId> objects;
  std::map<std::string, kg::NodeId> markings;
};

/// Explicit context for one planning instant. Object positions are expressed
/// in the ego frame at planning time; distances are between box centers.
inline SceneSnapshot BuildSceneGraph(const Scenario& sc, const EgoState& ego,
                                     const VehicleParams& params,
                                     const std::vector<ObjectTrack>& tracks,
                                     const std::vector<double>& collision_probabilities,
                                     int horizon, double ts,
                                     const std::string& ego_lane_id = {}) {
  SceneSnapshot snap;
  kg::SceneGraph& g = snap.graph;
  std::map<std::string, kg::NodeId> lanes;
  for (const auto& l : sc.lanes) {
    lanes[l.id] = g.AddEntity("lane", {{"lane_width", l.width}});
  }
  snap.ego = g.AddEntity("ego", {{"x", ego.x}, {"y", ego.y}, {"heading", ego.theta},
                                 {"speed", ego.v}});
  const std::string occupied =
      ego_lane_id.empty() ? OccupiedLane(sc, ego, params, {}) : ego_lane_id;
  if (!occupied.empty()) {
    g.AddRelation("is_on", {{"physical", snap.ego}, {"road", lanes.at(occupied)}});
  }
  for (const auto& m : sc.markings) {
    const kg::NodeId id = g.AddEntity(
        "lane_marking",
        {{"lane_marking_type", std::string(m.type == LineType::kSolid ? "solid" : "dashed")},
         {"poly_c0", m.polynomial.c[0]},
         {"poly_c1", m.polynomial.c[1]},
         {"poly_c2", m.polynomial.c[2]},
         {"poly_c3", m.polynomial.c[3]}});
    snap.markings[m.id] = id;
    if (!m.left_of.empty()) {
      g.AddRelation("lane_boundary", {{"marking", id}, {"lane", lanes.at(m.left_of)}},
                    {{"side", std::string("left")}});
    }
    if (!m.right_of.empty()) {
      g.AddRelation("lane_boundary", {{"marking", id}, {"lane", lanes.at(m.right_of)}},
                    {{"side", std::string("right")}});
    }
  }
  const geom::OrientedBox ego_box = EgoBox(ego, params);
  const double c = std::cos(ego.theta), s = std::sin(ego.theta);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const ObjectTrack& t = tracks[i];
    const double dx = t.pose.x - ego.x, dy = t.pose.y - ego.y;
    const double lon = c * dx + s * dy;
    const double lat = -s * dx + c * dy;
    const double distance =
        std::hypot(t.pose.x - ego_box.center.x, t.pose.y - ego_box.center.y);
    // Closing on the ego with an opposing heading.
    const double vx = t.speed * std::cos(t.pose.theta) - ego.v * c;
    const double vy = t.speed * std::sin(t.pose.theta) - ego.v * s;
    const bool closing = (dx * vx + dy * vy) < 0.0;
    const bool opposing = std::cos(t.pose.theta - ego.theta) < 0.0 && t.speed > 0.1;
    const kg::NodeId id = g.AddEntity(
        GraphType(t.object_class),
        {{"track_id", t.id},
         {"length", t.length},
         {"width", t.width},
         {"height", t.height},
         {"classification_certainty", t.certainty},
         {"collision_probability", collision_probabilities.at(i)},
         {"x", t.pose.x},
         {"y", t.pose.y},
         {"heading", t.pose.theta},
         {"speed", t.speed},
         {"longitudinal_offset", lon},
         {"lateral_offset", lat},
         {"distance", distance},
         {"oncoming", closing && opposing}});
    snap.objects[t.id] = id;
    if (const LaneSpec* l = LaneAt(sc, t.pose.x, t.pose.y)) {
      g.AddRelation("is_on", {{"physical", id}, {"road", lanes.at(l->id)}});
    }
    std::vector<const LaneSpec*> crossed;
    if (IsCrossing(sc, t, horizon, ts, &crossed)) {
      for (const LaneSpec* l : crossed) {
        g.AddRelation("is_crossing", {{"vru", id}, {"road", lanes.at(l->id)}});
      }
    }
  }
  return snap;
}

enum class ActuationMode { kPerfect, kController };

struct SimParams {
  double plant_dt = 0.05;
  int replan_every = 3;  // plant steps per planning cycle
  ActuationMode mode = ActuationMode::kPerfect;
  ControllerGains gains;
  CertaintyModel certainty;
  collision::CollisionParams collision;
  ObservationNoise noise;
  double goal_radius = 2.0;
  LanePolicy lane_policy = LanePolicy::kRearAxle;
  // Keep plans between the road edges, narrowed by corridor_margin.
  bool road_corridor = true;
  double corridor_margin = 0.95;
  nmpc::NmpcConfig planner;
  bool keep_trace = true;
};

/// Optional per-run diagnostic sinks.
struct Diagnostics {
  std::ostream* rule_trace = nullptr;
  std::ostream* graph_dump = nullptr;
  std::ostream* solver_log = nullptr;
  std::ostream* raster = nullptr;
  int raster_cycle = 0;
  int raster_step = 0;  // horizon step k of the rasterized field
  field::RasterGrid raster_grid;
};

struct TraceRow {
  double t = 0.0;
  EgoState state;
  EgoInput input;
  double lateral_acceleration = 0.0;
  double min_box_distance = std::numeric_limits<double>::infinity();
};

struct SimResult {
  std::string scenario_id;
  std::string family;
  int collisions = 0;
  bool goal_reached = false;
  double completion_time = std::numeric_limits<double>::quiet_NaN();
  double end_time = 0.0;
  std::map<std::int64_t, double> min_box_distance;
  double max_long_acceleration = 0.0;
  double min_long_acceleration = 0.0;
  double max_abs_lateral_acceleration = 0.0;
  // Smallest ego-object distance while stopped after having driven; NaN if
  // the ego never came to rest.
  double standstill_distance = std::numeric_limits<double>::quiet_NaN();
  int lane_departures_while_crossing = 0;
  double max_lane_offset = 0.0;
  bool deadlock = false;
  std::vector<double> braking_samples;  // |a| for every plant step with a < 0

  int solves = 0;
  int infeasible_starts = 0;
  int max_iteration_hits = 0;
  int descent_failures = 0;
  double max_bound_violation = 0.0;
  double max_dynamics_residual = 0.0;
  std::string error;

  std::vector<TraceRow> trace;
};

namespace detail {

inline void Accumulate(SimResult& r, const nmpc::Trajectory& t, const nmpc::NmpcConfig& cfg) {
  ++r.solves;
  if (t.status == nmpc::SolveStatus::kInfeasibleStart) {
    ++r.infeasible_starts;
    return;
  }
  if (t.status == nmpc::SolveStatus::kMaxIterations) ++r.max_iteration_hits;
  if (t.cost > t.initial_cost) ++r.descent_failures;
  r.max_bound_violation = std::max(r.max_bound_violation, t.max_violation);
  r.max_dynamics_residual =
      std::max(r.max_dynamics_residual, nmpc::DynamicsResidual(t, cfg.vehicle, cfg.ts));
}

// Planned state at `elapsed` seconds into a plan, linearly interpolated.
inline EgoState PlannedAt(const nmpc::Trajectory& plan, double elapsed, double ts) {
  const double pos = std::clamp(elapsed / ts, 0.0, static_cast<double>(plan.states.size() - 1));
  const std::size_t i = std::min(static_cast<std::size_t>(pos), plan.states.size() - 2);
  const double f = pos - static_cast<double>(i);
  const auto a = plan.states[i].AsArray();
  const auto b = plan.states[i + 1].AsArray();
  std::array<double, EgoState::kSize> out;
  for (std::size_t j = 0; j < EgoState::kSize; ++j) out[j] = a[j] + f * (b[j] - a[j]);
  return EgoState::FromArray(out);
}

}  // namespace detail

inline SimResult RunScenario(const Scenario& sc, const SimParams& params,
                             const Diagnostics& diag = {}) {
  sc.Validate();
  const auto& cfg = params.planner;
  cfg.Validate();
  const VehicleParams& vp = cfg.vehicle;
  const LaneSpec& ego_lane = sc.lane(sc.ego_lane);
  const rules::RuleSet rule_set = rules::RuleSet::Default();

  SimResult result;
  result.scenario_id = sc.id;
  result.family = sc.family;

  EgoState ego;  // origin, at rest
  std::vector<ObjectTrack> tracks;
  for (const auto& a : sc.actors) {
    tracks.push_back(ObjectTrack::FromSpec(a));
    result.min_box_distance[a.id] = std::numeric_limits<double>::infinity();
  }
  for (auto& t : tracks) {
    params.certainty.Update(t, std::hypot(t.pose.x - ego.x, t.pose.y - ego.y), 0.0);
  }

  const geom::Vec2 goal{sc.goal_distance, ego_lane.centerline(sc.goal_distance)};
  const std::optional<nmpc::Corridor> corridor = RoadCorridor(sc, params.corridor_margin);
  const int max_steps = static_cast<int>(std::ceil(sc.duration_cap / params.plant_dt - 1e-9));
  std::optional<nmpc::Trajectory> plan;
  double plan_time = 0.0;
  double prev_lateral_error = 0.0;
  bool moved = false;
  bool departed = false;
  double still_since = 0.0;
  int cycle = 0;
  std::string occupied = OccupiedLane(sc, ego, vp, {}, params.lane_policy);

  if (diag.solver_log) nmpc::WriteSolverLogHeader(*diag.solver_log);

  for (int step = 0; step < max_steps; ++step) {
    const double t = step * params.plant_dt;
    if (step % params.replan_every == 0) {
      occupied = OccupiedLane(sc, ego, vp, occupied, params.lane_policy);
      std::vector<double> probabilities;
      for (const auto& tr : tracks) {
        probabilities.push_back(
            TrackCollisionProbability(ego, vp, tr, params.collision, params.noise));
      }
      SceneSnapshot snap =
          BuildSceneGraph(sc, ego, vp, tracks, probabilities, cfg.horizon, cfg.ts, occupied);
      rules::ApplyRules(snap.graph, rule_set);
      field::Predictions predictions;
      for (const auto& tr : tracks) {
        predictions[tr.id] = PredictConstantVelocity(tr, cfg.horizon, cfg.ts);
      }
      const field::RiskFieldSet fields =
          field::BuildRiskFields(snap.graph, predictions, cfg.horizon);
      nmpc::Reference ref = nmpc::MakeReference(ego, ego_lane.centerline, sc.v_ref, cfg);
      if (params.road_corridor) ref.corridor = corridor;
      std::optional<nmpc::Trajectory> warm;
      if (plan) warm = nmpc::ShiftWarmStart(*plan, cfg);
      nmpc::Trajectory next = nmpc::Solve(ego, ref, fields, cfg, warm ? &*warm : nullptr);
      detail::Accumulate(result, next, cfg);

      if (diag.rule_trace) rules::WriteRuleTrace(*diag.rule_trace, snap.graph, t);
      if (diag.graph_dump) {
        *diag.graph_dump << "# t=" << t << '\n';
        snap.graph.Dump(*diag.graph_dump);
      }
      if (diag.solver_log) nmpc::WriteSolverLog(*diag.solver_log, t, next);
      if (diag.raster && cycle == diag.raster_cycle) {
        field::WriteRaster(*diag.raster, fields, diag.raster_step, diag.raster_grid);
      }
      plan = std::move(next);
      plan_time = t;
      ++cycle;
    }

    // Actuation.
    EgoInput u;
    const auto& bounds = cfg.bounds;
    if (plan->status == nmpc::SolveStatus::kInfeasibleStart) {
      u = {bounds.input_lower[0], 0.0};
    } else if (params.mode == ActuationMode::kPerfect) {
      u = plan->inputs.front();
    } else {
      // Track the plan one planner step ahead.
      const double elapsed = t - plan_time;
      const EgoState target = detail::PlannedAt(*plan, elapsed + cfg.ts, cfg.ts);
      const double err = -std::sin(ego.theta) * (target.x - ego.x) +
                         std::cos(ego.theta) * (target.y - ego.y);
      const double err_rate = step == 0 ? 0.0 : (err - prev_lateral_error) / params.plant_dt;
      prev_lateral_error = err;
      u.a = LongitudinalController(ego.v, target.v, params.gains, bounds);
      u.omega = LateralController(err, err_rate, params.gains, bounds);
    }
    // Actuator saturation keeps v and delta inside their bounds.
    const double dt = params.plant_dt;
    u.a = std::clamp(u.a, std::max(bounds.input_lower[0], (bounds.state_lower[3] - ego.v) / dt),
                     std::min(bounds.input_upper[0], (bounds.state_upper[3] - ego.v) / dt));
    u.omega = std::clamp(
        u.omega, std::max(bounds.input_lower[1], (bounds.state_lower[4] - ego.delta) / dt),
        std::min(bounds.input_upper[1], (bounds.state_upper[4] - ego.delta) / dt));

    ego = Step(ego, u, vp, dt);
    for (auto& tr : tracks) {
      tr.pose.x += dt * tr.speed * std::cos(tr.pose.theta);
      tr.pose.y += dt * tr.speed * std::sin(tr.pose.theta);
    }
    const double now = t + dt;
    result.end_time = now;

    // Metrics.
    const geom::OrientedBox ego_box = EgoBox(ego, vp);
    bool collided = false;
    bool crossing = false;
    double min_dist = std::numeric_limits<double>::infinity();
    for (auto& tr : tracks) {
      const double d = geom::BoxDistance(ego_box, tr.Box());
      params.certainty.Update(
          tr, std::hypot(tr.pose.x - ego_box.center.x, tr.pose.y - ego_box.center.y), dt);
      min_dist = std::min(min_dist, d);
      auto& best = result.min_box_distance[tr.id];
      best = std::min(best, d);
      if (d == 0.0) collided = true;
      if (IsCrossing(sc, tr, cfg.horizon, cfg.ts)) crossing = true;
    }
    const double lat_acc = LateralAcceleration(ego, vp);
    result.max_abs_lateral_acceleration =
        std::max(result.max_abs_lateral_acceleration, std::abs(lat_acc));
    result.max_long_acceleration = std::max(result.max_long_acceleration, u.a);
    result.min_long_acceleration = std::min(result.min_long_acceleration, u.a);
    if (u.a < 0.0) result.braking_samples.push_back(-u.a);

    const double lane_offset = std::abs(ego.y - ego_lane.centerline(ego.x));
    result.max_lane_offset = std::max(result.max_lane_offset, lane_offset);
    const bool out_of_lane = lane_offset >= 0.5 * ego_lane.width;
    if (crossing && out_of_lane && !departed) ++result.lane_departures_while_crossing;
    departed = crossing && out_of_lane;

    if (ego.v > 0.5) moved = true;
    if (std::abs(ego.v) < 0.1) {
      if (moved && std::isfinite(min_dist)) {
        result.standstill_distance = std::isnan(result.standstill_distance)
                                         ? min_dist
                                         : std::min(result.standstill_distance, min_dist);
      }
    } else {
      still_since = now;
    }

    if (params.keep_trace) result.trace.push_back({now, ego, u, lat_acc, min_dist});

    if (collided) {
      result.collisions = 1;
      break;
    }
    if ((geom::Vec2{ego.x, ego.y} - goal).Norm() <= params.goal_radius) {
      result.goal_reached = true;
      result.completion_time = now;
      break;
    }
  }
  if (!result.goal_reached && result.collisions == 0 && result.end_time - still_since >= 5.0) {
    result.deadlock = true;
  }
  return result;
}

/// Calls fn(i) for i in [0, count) on a pool of `parallelism` workers.
template <typename Fn>
void ParallelFor(std::size_t count, int parallelism, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) fn(i);
  };
  const int n = std::max(1, std::min<int>(parallelism, static_cast<int>(count)));
  if (n == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

/// RunScenario that records exceptions in `error` instead of throwing.
inline SimResult RunScenarioNoThrow(const Scenario& sc, const SimParams& params,
                                    const Diagnostics& diag = {}) {
  try {
    return RunScenario(sc, params, diag);
  } catch (const std::exception& e) {
    SimResult r;
    r.scenario_id = sc.id;
    r.family = sc.family;
    r.error = e.what();
    return r;
  }
}

/// Runs every scenario on a pool of `parallelism` workers. Results keep the
/// input order; a failing run is recorded in its `error` field.
inline std::vector<SimResult> RunBatch(const std::vector<Scenario>& scenarios,
                                       const SimParams& params, int parallelism = 1) {
  std::vector<SimResult> results(scenarios.size());
  ParallelFor(scenarios.size(), parallelism,
              [&](std::size_t i) { results[i] = RunScenarioNoThrow(scenarios[i], params); });
  return results;
}

inline double MinBoxDistance(const SimResult& r) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& [id, v] : r.min_box_distance) d = std::min(d, v);
  return d;
}

namespace detail {

inline std::string Fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline double Median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

inline void WriteTrace(std::ostream& os, const SimResult& r) {
  using detail::Fmt;
  os << "t,x,y,theta,v,delta,a,omega,lateral_acceleration,min_box_distance\n";
  for (const auto& row : r.trace) {
    os << Fmt(row.t) << ',' << Fmt(row.state.x) << ',' << Fmt(row.state.y) << ','
       << Fmt(row.state.theta) << ',' << Fmt(row.state.v) << ',' << Fmt(row.state.delta) << ','
       << Fmt(row.input.a) << ',' << Fmt(row.input.omega) << ','
       << Fmt(row.lateral_acceleration) << ',' << Fmt(row.min_box_distance) << '\n';
  }
}

/// One row per run.
inline void WriteResults(std::ostream& os, const std::vector<SimResult>& results) {
  using detail::Fmt;
  os << "scenario,family,collisions,goal_reached,completion_time,min_box_distance,"
        "max_long_acceleration,min_long_acceleration,max_abs_lateral_acceleration,"
        "standstill_distance,lane_departures_while_crossing,max_lane_offset,deadlock,solves,"
        "infeasible_starts,max_iteration_hits,descent_failures,max_bound_violation,"
        "max_dynamics_residual,error\n";
  for (const auto& r : results) {
    os << r.scenario_id << ',' << r.family << ',' << r.collisions << ',' << r.goal_reached
       << ',' << Fmt(r.completion_time) << ',' << Fmt(MinBoxDistance(r)) << ','
       << Fmt(r.max_long_acceleration) << ',' << Fmt(r.min_long_acceleration) << ','
       << Fmt(r.max_abs_lateral_acceleration) << ',' << Fmt(r.standstill_distance) << ','
       << r.lane_departures_while_crossing << ',' << Fmt(r.max_lane_offset) << ','
       << r.deadlock << ',' << r.solves << ',' << r.infeasible_starts << ','
       << r.max_iteration_hits << ',' << r.descent_failures << ','
       << Fmt(r.max_bound_violation) << ',' << Fmt(r.max_dynamics_residual) << ','
       << r.error << '\n';
  }
}

/// Per-family min/median/max of each metric plus run counts.
inline void WriteAggregate(std::ostream& os, const std::vector<SimResult>& results) {
  using detail::Fmt;
  std::map<std::string, std::vector<const SimResult*>> by_family;
  for (const auto& r : results) by_family[r.family].push_back(&r);
  os << "family,metric,count,min,median,max\n";
  for (const auto& [family, runs] : by_family) {
    int collisions = 0, goals = 0, deadlocks = 0, errors = 0, departures = 0;
    for (const auto* r : runs) {
      collisions += r->collisions;
      goals += r->goal_reached;
      deadlocks += r->deadlock;
      errors += !r->error.empty();
      departures += r->lane_departures_while_crossing;
    }
    auto count_row = [&](const char* name, int value) {
      os << family << ',' << name << ',' << runs.size() << ',' << value << ',' << value << ','
         << value << '\n';
    };
    count_row("runs", static_cast<int>(runs.size()));
    count_row("collisions", collisions);
    count_row("goals_reached", goals);
    count_row("deadlocks", deadlocks);
    count_row("errors", errors);
    count_row("lane_departures_while_crossing", departures);

    auto metric = [&](const char* name, auto getter) {
      std::vector<double> v;
      for (const auto* r : runs) {
        const double x = getter(*r);
        if (std::isfinite(x)) v.push_back(x);
      }
      if (v.empty()) {
        os << family << ',' << name << ",0,nan,nan,nan\n";
        return;
      }
      os << family << ',' << name << ',' << v.size() << ','
         << Fmt(*std::min_element(v.begin(), v.end())) << ',' << Fmt(detail::Median(v)) << ','
         << Fmt(*std::max_element(v.begin(), v.end())) << '\n';
    };
    metric("completion_time", [](const SimResult& r) { return r.completion_time; });
    metric("min_box_distance", [](const SimResult& r) { return MinBoxDistance(r); });
    metric("max_long_acceleration", [](const SimResult& r) { return r.max_long_acceleration; });
    metric("min_long_acceleration", [](const SimResult& r) { return r.min_long_acceleration; });
    metric("max_abs_lateral_acceleration",
           [](const SimResult& r) { return r.max_abs_lateral_acceleration; });
    metric("standstill_distance", [](const SimResult& r) { return r.standstill_distance; });
    metric("max_lane_offset", [](const SimResult& r) { return r.max_lane_offset; });
    metric("max_bound_violation", [](const SimResult& r) { return r.max_bound_violation; });
  }
}

}  // namespace ctxplan::sim
