// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/data/scene.hpp"

#include <Eigen/Core>

#include <optional>

namespace ctxtraj::env {

struct EnvConfig {
  double dt = 0.1;             // frame interval [s]
  double roi = 50.0;           // longitudinal reach of the neighbor template [m]
  double displacement_cap = 5.0;  // max |action| per frame [m]
  int lanes = 3;
  double lane_width = 3.5;     // [m]

  void validate() const;
};

/// Ego kinematics z_t = [x, y, vx, vy, ax, ay].
struct EgoState {
  double x = 0.0, y = 0.0;
  double vx = 0.0, vy = 0.0;
  double ax = 0.0, ay = 0.0;

  Eigen::Matrix<double, 6, 1> vector() const { return {x, y, vx, vy, ax, ay}; }
  bool operator==(const EgoState&) const = default;
};

/// Per-frame displacement a_t = [dx, dy].
struct EnvAction {
  double dx = 0.0;
  double dy = 0.0;
};

/// Deterministic transition. Position advances by the action; velocity and
/// acceleration are the implied finite differences.
EgoState step(const EgoState& state, const EnvAction& action, double dt, double displacement_cap = 5.0);

inline constexpr int kNeighborSlots = 6;
inline constexpr int kNeighborFeatures = 5;

/// Slot order of the neighbor template: lead then follow, for the left
/// (lane + 1), same, and right (lane - 1) lanes.
enum class Slot : int { LeftLead = 0, LeftFollow, SameLead, SameFollow, RightLead, RightFollow };

/// Rows per slot: dx, dy (neighbor minus ego), dvx, dvy, presence flag.
using NeighborMatrix = Eigen::Matrix<double, kNeighborSlots, kNeighborFeatures, Eigen::RowMajor>;

/// Row stored for an empty slot: dx at the template edge in the slot's
/// direction, all else zero.
Eigen::Matrix<double, 1, kNeighborFeatures> sentinel_row(Slot slot, double roi);

/// Ego description for neighbor lookup when the ego is not (or no longer)
/// following its own logged track.
struct EgoContext {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  int lane = 0;
  std::optional<int> exclude_vehicle;
};

/// Fills the six template slots with the nearest logged vehicle in the slot's
/// lane within +-roi longitudinally at `frame`.
NeighborMatrix extract_neighbors(const data::Scene& scene, const EgoContext& ego, long frame, double roi);

/// Same, for a logged ego track.
NeighborMatrix extract_neighbors(const data::Scene& scene, int ego_vehicle, long frame, double roi);

/// Raw (unstandardized) observation z || row-major V || one-hot lane.
Eigen::VectorXd assemble_observation(const EgoState& z, const NeighborMatrix& neighbors, int lane, int lanes);

inline Eigen::Index observation_size(int lanes) { return 6 + kNeighborSlots * kNeighborFeatures + lanes; }

struct ObservationBlocks {
  EgoState ego;
  NeighborMatrix neighbors;
  Eigen::VectorXd lane_one_hot;
};

/// Inverse of assemble_observation on a raw observation.
ObservationBlocks split_observation(const Eigen::VectorXd& raw, int lanes);

/// Per-feature affine map (v - mean) / std. Features with negligible spread
/// keep unit scale.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  static Standardizer fit(const Eigen::MatrixXd& rows);
  Eigen::RowVectorXd apply(const Eigen::VectorXd& raw) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& rows) const;
};

/// Ego state of a logged track at sample `i`.
EgoState logged_state(const data::Track& track, std::size_t i, double dt);

/// Lane index for a lateral offset from a reference lane, clamped to the road.
int lane_after_shift(int reference_lane, double lateral_shift, const EnvConfig& config);

}  // namespace ctxtraj::env
