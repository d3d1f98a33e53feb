// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace ctxtraj::data {

/// One vehicle's logged positions. Frames are strictly increasing.
struct Track {
  int vehicle_id = 0;
  std::vector<long> frames;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<int> lane;

  std::size_t size() const { return frames.size(); }
  long first_frame() const { return frames.front(); }
  long last_frame() const { return frames.back(); }

  /// Position of `frame` in the arrays, if logged.
  std::optional<std::size_t> index_of(long frame) const;

  Eigen::Vector2d position(std::size_t i) const { return {x[i], y[i]}; }
};

/// Finite-difference kinematics of a track sample: velocity by backward
/// difference (forward difference at the first sample), acceleration by
/// backward difference of velocities (zero without two prior samples).
struct Kinematics {
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  Eigen::Vector2d acceleration = Eigen::Vector2d::Zero();
};

Kinematics kinematics_at(const Track& track, std::size_t i, double dt);

struct Scene {
  int scene_id = 0;
  double dt = 0.1;
  std::vector<Track> tracks;

  const Track* find(int vehicle_id) const;
  long first_frame() const;
  long last_frame() const;
};

}  // namespace ctxtraj::data
