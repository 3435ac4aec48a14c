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
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ctxplan {

/// Planar kinematic state referenced at the center of the rear axle.
struct EgoState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;
  double delta = 0.0;

  static constexpr std::size_t kSize = 5;

  std::array<double, kSize> AsArray() const { return {x, y, theta, v, delta}; }
  static EgoState FromArray(const std::array<double, kSize>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
  }
  bool operator==(const EgoState&) const = default;
};

struct EgoInput {
  double a = 0.0;      // longitudinal acceleration, m/s^2
  double omega = 0.0;  // steering rate, rad/s

  static constexpr std::size_t kSize = 2;

  std::array<double, kSize> AsArray() const { return {a, omega}; }
  bool operator==(const EgoInput&) const = default;
};

struct VehicleParams {
  double wheelbase = 2.8;
  double width = 1.9;
  double length = 4.5;
  double rear_overhang = 0.9;

  // Offset from the rear axle to the footprint center along the heading.
  double CenterOffset() const { return 0.5 * length - rear_overhang; }
};

struct Bounds {
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  std::array<double, EgoState::kSize> state_lower{-kInf, -kInf, -kInf, -2.0, -0.1};
  std::array<double, EgoState::kSize> state_upper{kInf, kInf, kInf, 10.0, 0.1};
  std::array<double, EgoInput::kSize> input_lower{-4.0, -1.5};
  std::array<double, EgoInput::kSize> input_upper{2.0, 1.5};

  bool Valid() const {
    for (std::size_t i = 0; i < EgoState::kSize; ++i) {
      if (!(state_lower[i] <= state_upper[i])) return false;
    }
    for (std::size_t i = 0; i < EgoInput::kSize; ++i) {
      if (!(input_lower[i] <= input_upper[i])) return false;
    }
    return true;
  }
};

inline constexpr std::array<const char*, EgoState::kSize> kStateNames{
    "x", "y", "theta", "v", "delta"};
inline constexpr std::array<const char*, EgoInput::kSize> kInputNames{"a",
                                                                      "omega"};

struct BoundViolation {
  std::string component;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  // Distance from value to the closed interval.
  double Amount() const {
    if (value < lower) return lower - value;
    if (value > upper) return value - upper;
    return 0.0;
  }
};

/// Forward-Euler step of the discrete kinematic bicycle model.
inline EgoState Step(const EgoState& s, const EgoInput& u,
                     const VehicleParams& params, double ts) {
  EgoState next;
  next.x = s.x + ts * s.v * std::cos(s.theta);
  next.y = s.y + ts * s.v * std::sin(s.theta);
  next.theta = s.theta + ts * s.v / params.wheelbase * std::tan(s.delta);
  next.v = s.v + ts * u.a;
  next.delta = s.delta + ts * u.omega;
  return next;
}

inline std::vector<EgoState> Rollout(const EgoState& initial,
                                     std::span<const EgoInput> inputs,
                                     const VehicleParams& params, double ts) {
  std::vector<EgoState> states;
  states.reserve(inputs.size() + 1);
  states.push_back(initial);
  for (const auto& u : inputs) states.push_back(Step(states.back(), u, params, ts));
  return states;
}

inline std::vector<BoundViolation> CheckBounds(const EgoState& s,
                                               const Bounds& bounds) {
  std::vector<BoundViolation> out;
  const auto values = s.AsArray();
  for (std::size_t i = 0; i < EgoState::kSize; ++i) {
    if (values[i] < bounds.state_lower[i] || values[i] > bounds.state_upper[i]) {
      out.push_back({kStateNames[i], values[i], bounds.state_lower[i],
                     bounds.state_upper[i]});
    }
  }
  return out;
}

inline std::vector<BoundViolation> CheckBounds(const EgoInput& u,
                                               const Bounds& bounds) {
  std::vector<BoundViolation> out;
  const auto values = u.AsArray();
  for (std::size_t i = 0; i < EgoInput::kSize; ++i) {
    if (values[i] < bounds.input_lower[i] || values[i] > bounds.input_upper[i]) {
      out.push_back({kInputNames[i], values[i], bounds.input_lower[i],
                     bounds.input_upper[i]});
    }
  }
  return out;
}

/// Lateral acceleration of the kinematic model, v^2 tan(delta) / L.
inline double LateralAcceleration(const EgoState& s, const VehicleParams& p) {
  return s.v * s.v * std::tan(s.delta) / p.wheelbase;
}

}  // namespace ctxplan
