// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/data/scene.hpp"

#include <algorithm>
#include <limits>

namespace ctxtraj::data {

std::optional<std::size_t> Track::index_of(long frame) const {
  const auto it = std::lower_bound(frames.begin(), frames.end(), frame);
  if (it == frames.end() || *it != frame) return std::nullopt;
  return static_cast<std::size_t>(it - frames.begin());
}

namespace {

Eigen::Vector2d velocity_at(const Track& t, std::size_t i, double dt) {
  if (i >= 1) {
    const double h = static_cast<double>(t.frames[i] - t.frames[i - 1]) * dt;
    return (t.position(i) - t.position(i - 1)) / h;
  }
  if (t.size() > 1) {
    const double h = static_cast<double>(t.frames[1] - t.frames[0]) * dt;
    return (t.position(1) - t.position(0)) / h;
  }
  return Eigen::Vector2d::Zero();
}

}  // namespace

Kinematics kinematics_at(const Track& track, std::size_t i, double dt) {
  Kinematics k;
  k.velocity = velocity_at(track, i, dt);
  if (i >= 2) {
    const double h = static_cast<double>(track.frames[i] - track.frames[i - 1]) * dt;
    k.acceleration = (k.velocity - velocity_at(track, i - 1, dt)) / h;
  }
  return k;
}

const Track* Scene::find(int vehicle_id) const {
  for (const Track& t : tracks)
    if (t.vehicle_id == vehicle_id) return &t;
  return nullptr;
}

long Scene::first_frame() const {
  long f = std::numeric_limits<long>::max();
  for (const Track& t : tracks) f = std::min(f, t.first_frame());
  return f;
}

long Scene::last_frame() const {
  long f = std::numeric_limits<long>::min();
  for (const Track& t : tracks) f = std::max(f, t.last_frame());
  return f;
}

}  // namespace ctxtraj::data
