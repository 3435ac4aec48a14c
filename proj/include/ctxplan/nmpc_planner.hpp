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

// Horizon-N trajectory optimization over the kinematic bicycle model with
// risk-field terms in the objective. Single shooting: the decision variables
// are the N inputs, states follow from rollout, so the dynamics hold exactly.

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ctxplan/risk_field.hpp"
#include "ctxplan/vehicle_dynamics.hpp"

namespace ctxplan::nmpc {

struct SolverOptions {
  int max_iterations = 200;
  double convergence_tolerance = 1e-6;  // on the projected gradient, inf-norm
  double constraint_tolerance = 1e-6;
  // Try the fixed seed set besides the warm start.
  bool multi_start = true;
  int screening_iterations = 15;
};

struct NmpcConfig {
  int horizon = 23;
  double ts = 0.15;
  std::array<double, EgoState::kSize> stage_weights{0.0, 0.0, 0.0, 0.001, 0.0};
  std::array<double, EgoInput::kSize> input_weights{0.01, 1.0};
  std::array<double, EgoState::kSize> terminal_weights{0.20, 0.02, 0.0, 0.01, 0.0};
  Bounds bounds;
  VehicleParams vehicle;
  // Quadratic hinge on state-bound excess.
  double state_penalty_weight = 1e3;
  // Multiply the object and lane-marking risk terms in the objective.
  double object_risk_weight = 10.0;
  double marking_risk_weight = 10.0;
  // Fields are sampled this far ahead of the rear axle along the heading.
  double field_offset = 0.0;
  SolverOptions solver;

  void Validate() const {
    if (horizon < 2) throw std::invalid_argument("horizon must be >= 2");
    if (!(ts > 0.0)) throw std::invalid_argument("sampling time must be positive");
    for (double w : stage_weights) {
      if (w < 0) throw std::invalid_argument("negative stage weight");
    }
    for (double w : input_weights) {
      if (w < 0) throw std::invalid_argument("negative input weight");
    }
    for (double w : terminal_weights) {
      if (w < 0) throw std::invalid_argument("negative terminal weight");
    }
    if (object_risk_weight < 0 || marking_risk_weight < 0) {
      throw std::invalid_argument("negative risk weight");
    }
    if (!(solver.convergence_tolerance > 0) || !(solver.constraint_tolerance > 0)) {
      throw std::invalid_argument("tolerances must be positive");
    }
    if (!bounds.Valid()) throw std::invalid_argument("inconsistent bounds");
  }
};

/// Lateral band y in [lower(x), upper(x)] the rear axle is kept in, e.g. the
/// road edges narrowed by half the vehicle width.
struct Corridor {
  field::Cubic lower;
  field::Cubic upper;
};

/// Stage references r_0..r_N; r_N is the terminal goal. Only x, y, theta and v
/// are tracked, delta stays zero.
struct Reference {
  std::vector<EgoState> stages;
  std::optional<Corridor> corridor;  // hinge-penalized like the state bounds

  const EgoState& terminal() const { return stages.back(); }
};

/// Places r_k on the lane centerline at arc length k * ts * v_ref ahead of the
/// ego's projection onto it.
inline Reference MakeReference(const EgoState& ego, const field::Cubic& centerline,
                               double v_ref, const NmpcConfig& config) {
  Reference ref;
  ref.stages.reserve(config.horizon + 1);
  constexpr double kDx = 0.05;
  double x = ego.x;
  double s = 0.0;
  for (int k = 0; k <= config.horizon; ++k) {
    const double target = k * config.ts * v_ref;
    while (s + 1e-12 < target) {
      const double slope = centerline.Derivative(x + 0.5 * kDx);
      const double ds = kDx * std::sqrt(1.0 + slope * slope);
      if (s + ds > target) {
        x += kDx * (target - s) / ds;
        s = target;
        break;
      }
      x += kDx;
      s += ds;
    }
    EgoState r;
    r.x = x;
    r.y = centerline(x);
    r.theta = std::atan(centerline.Derivative(x));
    r.v = v_ref;
    ref.stages.push_back(r);
  }
  return ref;
}

enum class SolveStatus { kConverged, kMaxIterations, kInfeasibleStart };

inline const char* ToString(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIterations: return "max-iterations";
    case SolveStatus::kInfeasibleStart: return "infeasible-start";
  }
  return "?";
}

struct Trajectory {
  std::vector<EgoState> states;  // N + 1
  std::vector<EgoInput> inputs;  // N
  double cost = 0.0;
  double initial_cost = 0.0;  // objective of the (clamped) initial guess
  SolveStatus status = SolveStatus::kConverged;
  int iterations = 0;
  double max_violation = 0.0;
};

namespace detail {

inline double Hinge(double value, double lo, double hi) {
  if (value > hi) return value - hi;
  if (value < lo) return value - lo;
  return 0.0;
}

// Excess of y over the corridor at x and its x-derivative.
inline std::pair<double, double> CorridorExcess(const Corridor& c, double x, double y) {
  const double hi = c.upper(x);
  if (y > hi) return {y - hi, -c.upper.Derivative(x)};
  const double lo = c.lower(x);
  if (y < lo) return {y - lo, -c.lower.Derivative(x)};
  return {0.0, 0.0};
}

}  // namespace detail

/// l_x-weighted state error + l_u-weighted input + risk at (x, y) and step k.
inline double StageCost(const EgoState& state, const EgoInput& input, const EgoState& ref,
                        const field::RiskFieldSet& fields, std::size_t k,
                        const NmpcConfig& config) {
  const auto s = state.AsArray();
  const auto r = ref.AsArray();
  double cost = 0.0;
  for (std::size_t i = 0; i < EgoState::kSize; ++i) {
    if (i == 4) continue;  // steering angle has no reference
    cost += config.stage_weights[i] * (s[i] - r[i]) * (s[i] - r[i]);
  }
  const auto u = input.AsArray();
  for (std::size_t j = 0; j < EgoInput::kSize; ++j) cost += config.input_weights[j] * u[j] * u[j];
  if (!fields.empty()) {
    const double px = state.x + config.field_offset * std::cos(state.theta);
    const double py = state.y + config.field_offset * std::sin(state.theta);
    cost += fields.Sample(k, px, py, config.object_risk_weight, config.marking_risk_weight).value;
  }
  return cost;
}

inline double TerminalCost(const EgoState& state, const EgoState& ref, const NmpcConfig& config) {
  const auto s = state.AsArray();
  const auto r = ref.AsArray();
  double cost = 0.0;
  for (std::size_t i = 0; i < EgoState::kSize; ++i) {
    if (i == 4) continue;
    cost += config.terminal_weights[i] * (s[i] - r[i]) * (s[i] - r[i]);
  }
  return cost;
}

/// Single-shooting objective and, optionally, its
/// gradient with respect to the stacked inputs [a_0, omega_0, a_1, ...].
class Objective {
 public:
  Objective(const EgoState& initial, const Reference& ref, const field::RiskFieldSet& fields,
            const NmpcConfig& config)
      : initial_(initial), ref_(ref), fields_(fields), config_(config) {
    if (static_cast<int>(ref.stages.size()) != config.horizon + 1) {
      throw std::invalid_argument("reference length must be horizon + 1");
    }
  }

  int dimension() const { return 2 * config_.horizon; }

  std::vector<EgoInput> Unpack(const Eigen::VectorXd& u) const {
    std::vector<EgoInput> inputs(config_.horizon);
    for (int k = 0; k < config_.horizon; ++k) inputs[k] = {u[2 * k], u[2 * k + 1]};
    return inputs;
  }

  static Eigen::VectorXd Pack(std::span<const EgoInput> inputs) {
    Eigen::VectorXd u(2 * inputs.size());
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      u[2 * k] = inputs[k].a;
      u[2 * k + 1] = inputs[k].omega;
    }
    return u;
  }

  double Evaluate(const Eigen::VectorXd& u, Eigen::VectorXd* grad = nullptr) const {
    const int n = config_.horizon;
    const double ts = config_.ts;
    const double wheelbase = config_.vehicle.wheelbase;
    const auto inputs = Unpack(u);
    const auto states = Rollout(initial_, inputs, config_.vehicle, ts);

    // dJ/dx_k for k = 1..N
    std::vector<std::array<double, EgoState::kSize>> dx(n + 1);
    double cost = 0.0;
    for (int k = 0; k < n; ++k) {
      const auto uk = inputs[k].AsArray();
      for (std::size_t j = 0; j < EgoInput::kSize; ++j) {
        cost += config_.input_weights[j] * uk[j] * uk[j];
      }
    }
    for (int k = 1; k <= n; ++k) {
      const auto s = states[k].AsArray();
      const auto r = ref_.stages[k].AsArray();
      const auto& w = (k == n) ? config_.terminal_weights : config_.stage_weights;
      auto& d = dx[k];
      for (std::size_t i = 0; i < EgoState::kSize; ++i) {
        d[i] = 0.0;
        if (i == 4) continue;
        const double e = s[i] - r[i];
        cost += w[i] * e * e;
        d[i] = 2.0 * w[i] * e;
      }
      if (!fields_.empty()) {
        const double off = config_.field_offset;
        const double ct = std::cos(s[2]), st = std::sin(s[2]);
        const auto f = fields_.Sample(k, s[0] + off * ct, s[1] + off * st,
                                      config_.object_risk_weight, config_.marking_risk_weight);
        cost += f.value;
        d[0] += f.dx;
        d[1] += f.dy;
        d[2] += off * (-st * f.dx + ct * f.dy);
      }
      for (std::size_t i = 0; i < EgoState::kSize; ++i) {
        const double h = detail::Hinge(s[i], config_.bounds.state_lower[i],
                                       config_.bounds.state_upper[i]);
        if (h != 0.0) {
          cost += config_.state_penalty_weight * h * h;
          d[i] += 2.0 * config_.state_penalty_weight * h;
        }
      }
      if (ref_.corridor) {
        const auto [h, dh_dx] = detail::CorridorExcess(*ref_.corridor, s[0], s[1]);
        if (h != 0.0) {
          cost += config_.state_penalty_weight * h * h;
          d[0] += 2.0 * config_.state_penalty_weight * h * dh_dx;
          d[1] += 2.0 * config_.state_penalty_weight * h;
        }
      }
    }
    if (!grad) return cost;

    grad->resize(2 * n);
    std::array<double, EgoState::kSize> lambda = dx[n];
    for (int k = n - 1; k >= 0; --k) {
      const auto uk = inputs[k].AsArray();
      (*grad)[2 * k] = 2.0 * config_.input_weights[0] * uk[0] + ts * lambda[3];
      (*grad)[2 * k + 1] = 2.0 * config_.input_weights[1] * uk[1] + ts * lambda[4];
      if (k == 0) break;
      const EgoState& s = states[k];
      const double c = std::cos(s.theta), sn = std::sin(s.theta);
      const double cd = std::cos(s.delta);
      std::array<double, EgoState::kSize> next;
      next[0] = lambda[0];
      next[1] = lambda[1];
      next[2] = lambda[2] + ts * s.v * (-sn * lambda[0] + c * lambda[1]);
      next[3] = lambda[3] + ts * (c * lambda[0] + sn * lambda[1]) +
                ts * std::tan(s.delta) / wheelbase * lambda[2];
      next[4] = lambda[4] + ts * s.v / (wheelbase * cd * cd) * lambda[2];
      for (std::size_t i = 0; i < EgoState::kSize; ++i) next[i] += dx[k][i];
      lambda = next;
    }
    return cost;
  }

  /// Maps inputs onto the feasible set: each input is clamped to its bounds and
  /// to the range that keeps the next v and delta within the state bounds.
  Eigen::VectorXd Clamp(const Eigen::VectorXd& u) const {
    const auto& b = config_.bounds;
    const double ts = config_.ts;
    Eigen::VectorXd out = u;
    double v = initial_.v;
    double delta = initial_.delta;
    for (int k = 0; k < config_.horizon; ++k) {
      out[2 * k] = ClampCausal(out[2 * k], b.input_lower[0], b.input_upper[0],
                               (b.state_lower[3] - v) / ts, (b.state_upper[3] - v) / ts);
      out[2 * k + 1] = ClampCausal(out[2 * k + 1], b.input_lower[1], b.input_upper[1],
                                   (b.state_lower[4] - delta) / ts,
                                   (b.state_upper[4] - delta) / ts);
      v = v + ts * out[2 * k];
      delta = delta + ts * out[2 * k + 1];
    }
    return out;
  }

 private:
  static double ClampCausal(double value, double lo, double hi, double state_lo, double state_hi) {
    const double l = std::max(lo, state_lo);
    const double h = std::min(hi, state_hi);
    if (l > h) return state_hi < lo ? lo : hi;  // state already outside; steer back
    return std::clamp(value, l, h);
  }

  EgoState initial_;
  const Reference& ref_;
  const field::RiskFieldSet& fields_;
  const NmpcConfig& config_;
};

inline double MaxBoundViolation(const Trajectory& t, const Bounds& bounds) {
  double worst = 0.0;
  for (std::size_t k = 1; k < t.states.size(); ++k) {
    for (const auto& v : CheckBounds(t.states[k], bounds)) worst = std::max(worst, v.Amount());
  }
  for (const auto& u : t.inputs) {
    for (const auto& v : CheckBounds(u, bounds)) worst = std::max(worst, v.Amount());
  }
  return worst;
}

/// Largest |x_{k+1} - f(x_k, u_k)| over the trajectory.
inline double DynamicsResidual(const Trajectory& t, const VehicleParams& params, double ts) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < t.states.size(); ++k) {
    const auto pred = Step(t.states[k], t.inputs[k], params, ts).AsArray();
    const auto got = t.states[k + 1].AsArray();
    for (std::size_t i = 0; i < EgoState::kSize; ++i) {
      worst = std::max(worst, std::abs(pred[i] - got[i]));
    }
  }
  return worst;
}

namespace detail {

struct Descent {
  Eigen::VectorXd u;
  double cost = 0.0;
  SolveStatus status = SolveStatus::kMaxIterations;
  int iterations = 0;
};

// Projected BFGS from a feasible u with a monotone Armijo backtracking line
// search. The returned cost never exceeds the starting cost.
inline Descent Descend(const Objective& objective, Eigen::VectorXd u, int max_iterations,
                       double convergence_tolerance) {
  Eigen::VectorXd g;
  double cost = objective.Evaluate(u, &g);
  const int dim = static_cast<int>(u.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(dim, dim);
  bool fresh_h = true;
  SolveStatus status = SolveStatus::kMaxIterations;
  int iter = 0;
  constexpr double kArmijo = 1e-4;
  for (; iter < max_iterations; ++iter) {
    const Eigen::VectorXd pg = objective.Clamp(u - g) - u;
    if (pg.lpNorm<Eigen::Infinity>() < convergence_tolerance) {
      status = SolveStatus::kConverged;
      break;
    }

    // Coordinates the projection (nearly) pins take a plain gradient step;
    // the quasi-Newton direction acts on the free ones only.
    std::vector<bool> active(dim);
    Eigen::VectorXd g_free = g;
    for (int i = 0; i < dim; ++i) {
      active[i] = std::abs(pg[i]) < 0.5 * std::abs(g[i]);
      if (active[i]) g_free[i] = 0.0;
    }

    Eigen::VectorXd candidate, cand_g;
    double cand_cost = cost;
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) {
        h.setIdentity();
        fresh_h = true;
      }
      Eigen::VectorXd d = -(h * g_free);
      for (int i = 0; i < dim; ++i) {
        if (active[i]) d[i] = -g[i];
      }
      if (g.dot(d) >= 0.0) {
        h.setIdentity();
        fresh_h = true;
        d = -g;
      }
      // The first quasi-Newton step has no curvature information yet.
      double t = fresh_h ? std::min(1.0, 1.0 / std::max(1e-12, g.lpNorm<Eigen::Infinity>())) : 1.0;
      for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
        candidate = objective.Clamp(u + t * d);
        const Eigen::VectorXd step = candidate - u;
        if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
        cand_cost = objective.Evaluate(candidate, &cand_g);
        if (cand_cost <= cost + kArmijo * g.dot(step) && cand_cost < cost) {
          accepted = true;
          break;
        }
      }
      if (!accepted && fresh_h) break;
    }
    if (!accepted) {
      status = SolveStatus::kConverged;  // no descent left at this precision
      break;
    }

    const Eigen::VectorXd s = candidate - u;
    const Eigen::VectorXd y = cand_g - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh_h) {
        h *= sy / y.squaredNorm();
        fresh_h = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      h += rho * ((1.0 + rho * y.dot(hy)) * (s * s.transpose()) -
                  (hy * s.transpose() + s * hy.transpose()));
    }
    const double decrease = cost - cand_cost;
    u = candidate;
    g = cand_g;
    cost = cand_cost;
    if (decrease <= 1e-13 * (1.0 + std::abs(cost))) {
      if (!fresh_h) {
        // Stalled on stale curvature; retry from a plain gradient step.
        h.setIdentity();
        fresh_h = true;
        continue;
      }
      status = SolveStatus::kConverged;
      ++iter;
      break;
    }
  }
  return {std::move(u), cost, status, iter};
}

}  // namespace detail

/// Extra initial guesses tried besides the warm start: zero input, steering
/// pulses (a turn followed by its mirror) in both directions, and braking.
inline std::vector<std::vector<EgoInput>> DefaultSeeds(int horizon) {
  std::vector<std::vector<EgoInput>> seeds;
  seeds.emplace_back(horizon, EgoInput{});
  for (double rate : {0.1, 0.3}) {
    for (int len : {2, 4}) {
      for (double sign : {-1.0, 1.0}) {
        std::vector<EgoInput> seed(horizon);
        for (int k = 0; k < len && k < horizon; ++k) seed[k].omega = sign * rate;
        for (int k = len; k < 2 * len && k < horizon; ++k) seed[k].omega = -sign * rate;
        seeds.push_back(std::move(seed));
      }
    }
  }
  for (double decel : {-1.0, -4.0}) seeds.emplace_back(horizon, EgoInput{decel, 0.0});
  return seeds;
}

/// Projected quasi-Newton (BFGS) descent with a monotone backtracking line
/// search. With multi-start enabled every seed (warm start first) gets a
/// short screening descent and the cheapest one is refined to convergence.
/// Deterministic: the seed set is fixed and ties keep the earlier seed.
inline Trajectory Solve(const EgoState& initial_in, const Reference& ref,
                        const field::RiskFieldSet& fields, const NmpcConfig& config,
                        const Trajectory* warm_start = nullptr) {
  config.Validate();
  const int n = config.horizon;
  const double tol = config.solver.constraint_tolerance;

  EgoState initial = initial_in;
  bool infeasible = false;
  {
    auto a = initial.AsArray();
    for (std::size_t i = 0; i < EgoState::kSize; ++i) {
      const double lo = config.bounds.state_lower[i], hi = config.bounds.state_upper[i];
      if (a[i] < lo - tol || a[i] > hi + tol) infeasible = true;
      a[i] = std::clamp(a[i], lo, hi);
    }
    if (!infeasible) initial = EgoState::FromArray(a);
  }

  Objective objective(initial, ref, fields, config);
  Trajectory out;
  if (infeasible) {
    out.inputs.assign(n, EgoInput{});
    out.states = Rollout(initial, out.inputs, config.vehicle, config.ts);
    out.cost = out.initial_cost = objective.Evaluate(Objective::Pack(out.inputs));
    out.status = SolveStatus::kInfeasibleStart;
    out.max_violation = MaxBoundViolation(out, config.bounds);
    return out;
  }

  std::vector<Eigen::VectorXd> starts;
  if (warm_start && static_cast<int>(warm_start->inputs.size()) == n) {
    starts.push_back(objective.Clamp(Objective::Pack(warm_start->inputs)));
  }
  if (starts.empty() || config.solver.multi_start) {
    for (const auto& seed : DefaultSeeds(n)) {
      starts.push_back(objective.Clamp(Objective::Pack(seed)));
      if (!config.solver.multi_start) break;
    }
  }
  out.initial_cost = objective.Evaluate(starts.front());

  const double conv = config.solver.convergence_tolerance;
  const int max_it = config.solver.max_iterations;
  detail::Descent best;
  if (starts.size() == 1) {
    best = detail::Descend(objective, starts.front(), max_it, conv);
  } else {
    const int screen = std::min(config.solver.screening_iterations, max_it);
    bool have = false;
    for (const auto& start : starts) {
      detail::Descent d = detail::Descend(objective, start, screen, conv);
      if (!have || d.cost < best.cost) {
        best = std::move(d);
        have = true;
      }
    }
    if (best.status != SolveStatus::kConverged) {
      detail::Descent rest = detail::Descend(objective, best.u, max_it - screen, conv);
      rest.iterations += best.iterations;
      best = std::move(rest);
    }
  }

  out.inputs = objective.Unpack(best.u);
  out.states = Rollout(initial, out.inputs, config.vehicle, config.ts);
  out.cost = best.cost;
  out.status = best.status;
  out.iterations = best.iterations;
  out.max_violation = MaxBoundViolation(out, config.bounds);
  return out;
}

/// Drops the first input, repeats the last and re-rolls from the next state.
inline Trajectory ShiftWarmStart(const Trajectory& previous, const NmpcConfig& config) {
  Trajectory out;
  if (previous.status == SolveStatus::kInfeasibleStart || previous.inputs.empty()) {
    out.inputs.assign(config.horizon, EgoInput{});
    const EgoState start = previous.states.empty() ? EgoState{} : previous.states.front();
    out.states = Rollout(start, out.inputs, config.vehicle, config.ts);
    out.status = previous.status;
    return out;
  }
  out.inputs.assign(previous.inputs.begin() + 1, previous.inputs.end());
  out.inputs.push_back(previous.inputs.back());
  const EgoState start = previous.states.size() > 1 ? previous.states[1] : previous.states[0];
  out.states = Rollout(start, out.inputs, config.vehicle, config.ts);
  out.status = previous.status;
  return out;
}

/// One comma-separated diagnostic record per solve.
inline void WriteSolverLogHeader(std::ostream& os) {
  os << "time,status,iterations,initial_cost,cost,max_violation\n";
}

inline void WriteSolverLog(std::ostream& os, double time, const Trajectory& t) {
  os << time << ',' << ToString(t.status) << ',' << t.iterations << ',' << t.initial_cost << ','
     << t.cost << ',' << t.max_violation << '\n';
}

}  // namespace ctxplan::nmpc
