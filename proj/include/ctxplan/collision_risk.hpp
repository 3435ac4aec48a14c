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

// Analytic collision probability between the ego and an obstacle edge under
// Gaussian measurement noise, discounted by the opportunity to brake.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ctxplan::collision {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Measured geometry of one obstacle edge relative to the ego front.
/// x_bar is the distance still to travel until the edge is reached, y_bar the
/// lateral offset of the ego from the edge center, psi_bar the ego course
/// relative to the edge normal and w_t the edge length.
struct EdgeObservation {
  double x_bar = 0.0;
  double y_bar = 0.0;
  double psi_bar = 0.0;
  double w_t = 1.0;
  double var_x = 0.25;
  double var_y = 0.04;
  double var_psi = 0.0025;
  double var_wt = 0.04;
};

struct CollisionParams {
  double w_e = 1.9;    // ego width, m
  double d0 = 3.0;     // braking-deceleration threshold, m/s^2
  double alpha = 2.0;  // sigmoid steepness, 1/(m/s^2)
};

struct Gaussian1D {
  double mean = 0.0;
  double variance = 0.0;
};

// Above this |psi_bar| the small-angle variance propagation is unreliable.
inline constexpr double kSmallAngleLimit = 0.3;

inline bool OutsideSmallAngleRegime(const EdgeObservation& obs) {
  return std::abs(obs.psi_bar) > kSmallAngleLimit;
}

/// Lateral offset once the ego has driven up to the edge (x_bar = 0).
inline Gaussian1D LateralOffsetAtZero(const EdgeObservation& obs) {
  Gaussian1D g;
  g.mean = obs.y_bar + obs.x_bar * std::tan(obs.psi_bar);
  g.variance = obs.var_y + obs.var_psi * (obs.x_bar * obs.x_bar + obs.var_x);
  return g;
}

inline double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// P(-h < N(mean, variance) < h). Zero variance degenerates to |mean| < h.
inline double ProbabilityWithinBand(double mean, double variance, double h) {
  if (!(variance > 0.0)) return std::abs(mean) < h ? 1.0 : 0.0;
  const double sigma = std::sqrt(variance);
  const double p = NormalCdf((h - mean) / sigma) - NormalCdf((-h - mean) / sigma);
  return std::clamp(p, 0.0, 1.0);
}

inline double CollisionProbability(const EdgeObservation& obs,
                                   const CollisionParams& params) {
  const Gaussian1D lateral = LateralOffsetAtZero(obs);
  const double h = 0.5 * (params.w_e + obs.w_t);
  return ProbabilityWithinBand(lateral.mean, lateral.variance + 0.25 * obs.var_wt,
                               h);
}

/// Deceleration needed to come to rest exactly at the edge.
inline double BrakingDeceleration(double v, const EdgeObservation& obs) {
  if (!(obs.x_bar > 0.0)) {
    throw DomainError("braking deceleration undefined for x_bar <= 0");
  }
  const double vx = v * std::cos(obs.psi_bar);
  return vx * vx / (2.0 * obs.x_bar);
}

inline double Logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

/// P(c) scaled by S(alpha (d - d0)): vanishes when braking is easy (d < d0)
/// and approaches P(c) when it is not.
inline double SmoothedCollisionProbability(double v, const EdgeObservation& obs,
                                           const CollisionParams& params) {
  const double d = BrakingDeceleration(v, obs);
  return CollisionProbability(obs, params) * Logistic(params.alpha * (d - params.d0));
}

}  // namespace ctxplan::collision
