// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/data/scene.hpp"
#include "ctxtraj/rng.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace ctxtraj::data {

/// Intelligent Driver Model constants.
struct IdmParams {
  double v0 = 15.0;     // desired speed [m/s]
  double T = 1.5;       // time headway [s]
  double a_max = 1.0;   // maximum acceleration [m/s^2]
  double b = 1.5;       // comfortable deceleration [m/s^2]
  double s0 = 2.0;      // standstill gap [m]
  double delta = 4.0;   // acceleration exponent

  void validate() const;
};

/// a = a_max [1 - (v/v0)^delta - (s*/s)^2], s* = s0 + vT + v dv / (2 sqrt(a_max b)).
/// `gap` is bumper-to-bumper; `closing_speed` is v - v_leader. A missing
/// leader is an infinite gap.
double idm_acceleration(const IdmParams& p, double v, std::optional<double> gap, double closing_speed);

/// Gap at which a follower at speed v has zero acceleration behind a leader
/// at the same speed. Requires v < v0.
double equilibrium_gap(const IdmParams& p, double v);

/// Longitudinal state of one vehicle in a single-lane platoon.
struct PlatoonVehicle {
  double position = 0.0;
  double speed = 0.0;
};

/// Leader acceleration as a function of (time, speed).
using LeaderControl = std::function<double(double, double)>;

/// Explicit-Euler simulation of one lane: vehicle 0 leads under `leader`,
/// the rest follow by IDM. Speeds are clamped at zero. Returns positions per
/// vehicle per frame (frames + 1 samples including the initial one).
std::vector<std::vector<double>> simulate_platoon(const IdmParams& p, const LeaderControl& leader,
                                                  std::vector<PlatoonVehicle> vehicles, double vehicle_length,
                                                  long frames, double dt);

struct SynthConfig {
  IdmParams idm;
  int lanes = 3;
  int vehicles = 8;
  long frames = 1200;
  double dt = 0.1;
  double lane_width = 3.5;
  double vehicle_length = 5.0;
  double period = 60.0;      // leader slow-down period [s]
  double spawn_spacing = 30.0;  // initial leader-to-follower spacing (front to front) [m]
  int scene_id = 1;

  void validate() const;
};

/// Stop-and-go expert scene: vehicles dealt round-robin onto straight lanes,
/// each lane's leader tracking a sinusoidal target speed (floored at zero)
/// and followers driven by IDM. Lateral position is the lane center.
Scene synth_experts(const SynthConfig& config, Rng& rng);

}  // namespace ctxtraj::data
