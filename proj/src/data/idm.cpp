// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/data/idm.hpp"

#include "ctxtraj/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ctxtraj::data {

void IdmParams::validate() const {
  if (!(v0 > 0 && T > 0 && a_max > 0 && b > 0 && s0 > 0 && delta > 0))
    throw Error("data", "IDM parameters must all be positive");
}

double idm_acceleration(const IdmParams& p, double v, std::optional<double> gap, double closing_speed) {
  const double free_road = 1.0 - std::pow(v / p.v0, p.delta);
  if (!gap) return p.a_max * free_road;
  const double desired = p.s0 + v * p.T + v * closing_speed / (2.0 * std::sqrt(p.a_max * p.b));
  // Overlapping vehicles: treat as a tiny gap so the follower brakes hard.
  const double s = std::max(*gap, 1e-2);
  return p.a_max * (free_road - (desired / s) * (desired / s));
}

double equilibrium_gap(const IdmParams& p, double v) {
  const double free_road = 1.0 - std::pow(v / p.v0, p.delta);
  if (!(free_road > 0.0)) throw Error("data", "no equilibrium gap at or above the desired speed");
  return (p.s0 + v * p.T) / std::sqrt(free_road);
}

std::vector<std::vector<double>> simulate_platoon(const IdmParams& p, const LeaderControl& leader,
                                                  std::vector<PlatoonVehicle> vehicles, double vehicle_length,
                                                  long frames, double dt) {
  std::vector<std::vector<double>> positions(vehicles.size());
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    positions[i].reserve(static_cast<std::size_t>(frames) + 1);
    positions[i].push_back(vehicles[i].position);
  }
  std::vector<double> accel(vehicles.size());
  for (long f = 0; f < frames; ++f) {
    const double time = static_cast<double>(f) * dt;
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
      if (i == 0) {
        accel[i] = leader(time, vehicles[i].speed);
      } else {
        const double gap = vehicles[i - 1].position - vehicles[i].position - vehicle_length;
        accel[i] = idm_acceleration(p, vehicles[i].speed, gap, vehicles[i].speed - vehicles[i - 1].speed);
      }
    }
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
      vehicles[i].position += vehicles[i].speed * dt;
      vehicles[i].speed = std::max(0.0, vehicles[i].speed + accel[i] * dt);
      positions[i].push_back(vehicles[i].position);
    }
  }
  return positions;
}

void SynthConfig::validate() const {
  idm.validate();
  if (lanes < 1) throw Error("data", "lane count must be positive");
  if (vehicles < 1) throw Error("data", "vehicle count must be positive");
  if (frames < 2) throw Error("data", "synthesis horizon must be at least 2 frames");
  if (!(dt > 0.0) || !(lane_width > 0.0) || !(vehicle_length > 0.0) || !(period > 0.0))
    throw Error("data", "dt, lane width, vehicle length and period must be positive");
  if (!(spawn_spacing - vehicle_length > idm.s0))
    throw Error("data", "spawn spacing must leave a bumper gap larger than s0");
}

Scene synth_experts(const SynthConfig& c, Rng& rng) {
  c.validate();
  const IdmParams& p = c.idm;

  // Speed at which the spawn gap is an equilibrium gap (bisection).
  const double spawn_gap = c.spawn_spacing - c.vehicle_length;
  double lo = 0.0;
  double hi = p.v0 * (1.0 - 1e-9);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (equilibrium_gap(p, mid) < spawn_gap ? lo : hi) = mid;
  }
  const double spawn_speed = lo;

  Scene scene;
  scene.scene_id = c.scene_id;
  scene.dt = c.dt;
  std::vector<Track> tracks(static_cast<std::size_t>(c.vehicles));
  int next_id = 1;
  for (int lane = 0; lane < c.lanes; ++lane) {
    std::vector<int> members;
    for (int v = lane; v < c.vehicles; v += c.lanes) members.push_back(v);
    if (members.empty()) continue;

    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double offset = rng.uniform(0.0, c.spawn_spacing);
    const double omega = 2.0 * std::numbers::pi / c.period;
    const double v0 = p.v0;
    const double b = p.b;
    const double a_max = p.a_max;
    // Target speed swings between standstill and the desired speed.
    LeaderControl leader = [=](double t, double v) {
      const double target = std::max(0.0, v0 * (0.4 + 0.7 * std::cos(omega * t + phase)));
      return std::clamp((target - v) / 2.0, -b, a_max);
    };

    std::vector<PlatoonVehicle> platoon;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const double x = offset + c.spawn_spacing * static_cast<double>(members.size() - 1 - k);
      platoon.push_back({x, spawn_speed});
    }
    const auto positions = simulate_platoon(p, leader, platoon, c.vehicle_length, c.frames - 1, c.dt);
    const double y = (static_cast<double>(lane) + 0.5) * c.lane_width;
    for (std::size_t k = 0; k < members.size(); ++k) {
      Track& t = tracks[static_cast<std::size_t>(members[k])];
      t.vehicle_id = next_id + members[k];
      for (long f = 0; f < c.frames; ++f) {
        t.frames.push_back(f);
        t.x.push_back(positions[k][static_cast<std::size_t>(f)]);
        t.y.push_back(y);
        t.lane.push_back(lane);
      }
    }
  }
  scene.tracks = std::move(tracks);
  return scene;
}

}  // namespace ctxtraj::data
