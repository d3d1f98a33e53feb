// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/env/environment.hpp"

#include "ctxtraj/error.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>

namespace ctxtraj::env {

void EnvConfig::validate() const {
  if (!(dt > 0.0)) throw Error("env", "dt must be positive");
  if (!(roi > 0.0)) throw Error("env", "RoI extent must be positive");
  if (!(displacement_cap > 0.0)) throw Error("env", "displacement cap must be positive");
  if (lanes < 1) throw Error("env", "lane count must be positive");
  if (!(lane_width > 0.0)) throw Error("env", "lane width must be positive");
}

EgoState step(const EgoState& s, const EnvAction& a, double dt, double displacement_cap) {
  if (!(dt > 0.0)) throw Error("env", "dt must be positive");
  if (!std::isfinite(a.dx) || !std::isfinite(a.dy) || !s.vector().allFinite())
    throw Error("env", "non-finite state or action");
  if (std::hypot(a.dx, a.dy) > displacement_cap)
    throw Error("env", "action exceeds the displacement cap of " + std::to_string(displacement_cap) + " m");
  EgoState next;
  next.x = s.x + a.dx;
  next.y = s.y + a.dy;
  next.vx = a.dx / dt;
  next.vy = a.dy / dt;
  next.ax = (next.vx - s.vx) / dt;
  next.ay = (next.vy - s.vy) / dt;
  return next;
}

Eigen::Matrix<double, 1, kNeighborFeatures> sentinel_row(Slot slot, double roi) {
  const bool lead = static_cast<int>(slot) % 2 == 0;
  Eigen::Matrix<double, 1, kNeighborFeatures> row = Eigen::Matrix<double, 1, kNeighborFeatures>::Zero();
  row(0) = lead ? roi : -roi;
  return row;
}

NeighborMatrix extract_neighbors(const data::Scene& scene, const EgoContext& ego, long frame, double roi) {
  NeighborMatrix v;
  std::array<double, kNeighborSlots> best;
  best.fill(std::numeric_limits<double>::infinity());
  for (int s = 0; s < kNeighborSlots; ++s) v.row(s) = sentinel_row(static_cast<Slot>(s), roi);

  for (const data::Track& t : scene.tracks) {
    if (ego.exclude_vehicle && t.vehicle_id == *ego.exclude_vehicle) continue;
    const auto i = t.index_of(frame);
    if (!i) continue;
    const int lane_offset = t.lane[*i] - ego.lane;
    int base;
    if (lane_offset == 1) {
      base = static_cast<int>(Slot::LeftLead);
    } else if (lane_offset == 0) {
      base = static_cast<int>(Slot::SameLead);
    } else if (lane_offset == -1) {
      base = static_cast<int>(Slot::RightLead);
    } else {
      continue;
    }
    const Eigen::Vector2d rel = t.position(*i) - ego.position;
    if (std::abs(rel.x()) > roi) continue;
    const int slot = rel.x() >= 0.0 ? base : base + 1;
    const double distance = std::abs(rel.x());
    if (distance >= best[static_cast<std::size_t>(slot)]) continue;
    best[static_cast<std::size_t>(slot)] = distance;
    const Eigen::Vector2d dv = data::kinematics_at(t, *i, scene.dt).velocity - ego.velocity;
    v.row(slot) << rel.x(), rel.y(), dv.x(), dv.y(), 1.0;
  }
  return v;
}

NeighborMatrix extract_neighbors(const data::Scene& scene, int ego_vehicle, long frame, double roi) {
  const data::Track* ego = scene.find(ego_vehicle);
  if (ego == nullptr) throw Error("env", "ego vehicle " + std::to_string(ego_vehicle) + " not in scene");
  const auto i = ego->index_of(frame);
  if (!i) throw Error("env", "ego vehicle " + std::to_string(ego_vehicle) + " missing at frame " + std::to_string(frame));
  EgoContext ctx;
  ctx.position = ego->position(*i);
  ctx.velocity = data::kinematics_at(*ego, *i, scene.dt).velocity;
  ctx.lane = ego->lane[*i];
  ctx.exclude_vehicle = ego_vehicle;
  return extract_neighbors(scene, ctx, frame, roi);
}

Eigen::VectorXd assemble_observation(const EgoState& z, const NeighborMatrix& neighbors, int lane, int lanes) {
  if (lane < 0 || lane >= lanes) throw Error("env", "lane index " + std::to_string(lane) + " outside [0, " + std::to_string(lanes) + ")");
  Eigen::VectorXd obs(observation_size(lanes));
  obs.head<6>() = z.vector();
  obs.segment<kNeighborSlots * kNeighborFeatures>(6) = Eigen::Map<const Eigen::Matrix<double, kNeighborSlots * kNeighborFeatures, 1>>(neighbors.data());
  obs.tail(lanes).setZero();
  obs(6 + kNeighborSlots * kNeighborFeatures + lane) = 1.0;
  return obs;
}

ObservationBlocks split_observation(const Eigen::VectorXd& raw, int lanes) {
  if (raw.size() != observation_size(lanes)) throw Error("env", "observation length does not match lane count");
  ObservationBlocks b;
  b.ego = {raw(0), raw(1), raw(2), raw(3), raw(4), raw(5)};
  b.neighbors = Eigen::Map<const NeighborMatrix>(raw.data() + 6);
  b.lane_one_hot = raw.tail(lanes);
  return b;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw Error("env", "cannot fit a standardizer on zero observations");
  Standardizer s;
  s.mean = rows.colwise().mean().transpose();
  s.stddev.resize(rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const double var = (rows.col(c).array() - s.mean(c)).square().mean();
    const double sd = std::sqrt(var);
    s.stddev(c) = sd > 1e-8 ? sd : 1.0;
  }
  return s;
}

Eigen::RowVectorXd Standardizer::apply(const Eigen::VectorXd& raw) const {
  if (raw.size() != mean.size()) throw Error("env", "observation length does not match the standardizer");
  return ((raw - mean).array() / stddev.array()).matrix().transpose();
}

Eigen::MatrixXd Standardizer::apply_rows(const Eigen::MatrixXd& rows) const {
  Eigen::MatrixXd out(rows.rows(), rows.cols());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) out.row(r) = apply(rows.row(r).transpose());
  return out;
}

EgoState logged_state(const data::Track& track, std::size_t i, double dt) {
  const auto k = data::kinematics_at(track, i, dt);
  return {track.x[i], track.y[i], k.velocity.x(), k.velocity.y(), k.acceleration.x(), k.acceleration.y()};
}

int lane_after_shift(int reference_lane, double lateral_shift, const EnvConfig& config) {
  const int shifted = reference_lane + static_cast<int>(std::lround(lateral_shift / config.lane_width));
  return std::clamp(shifted, 0, config.lanes - 1);
}

}  // namespace ctxtraj::env
