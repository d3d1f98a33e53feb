// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <vector>

namespace ctxtraj::gail {

/// Per-step records of one generated trajectory.
struct TrajectoryRecord {
  std::vector<Eigen::RowVectorXd> observations;       // s_t (standardized)
  std::vector<Eigen::Vector2d> actions;               // a_t, as executed
  std::vector<Eigen::Vector2d> samples;               // policy-space draw behind a_t
  std::vector<Eigen::RowVectorXd> next_observations;  // s_{t+1}
  std::vector<double> log_prob;                       // log pi_theta(a_t | s_t)
  std::vector<double> log_prob_old;                   // log pi_old(a_t | s_t)
  Eigen::VectorXd rewards;
  Eigen::VectorXd values;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;

  std::size_t size() const { return actions.size(); }
};

/// Rollout storage shared by the discriminator, value and PPO updates. One
/// record per trajectory; trajectory boundaries are the record boundaries.
class RolloutBuffer {
 public:
  std::size_t begin_trajectory();

  void append(std::size_t trajectory, const Eigen::RowVectorXd& observation, const Eigen::Vector2d& action,
              const Eigen::Vector2d& sample, const Eigen::RowVectorXd& next_observation, double log_prob,
              double log_prob_old);

  std::size_t trajectories() const { return records_.size(); }
  std::size_t steps() const;
  /// Start offset of each trajectory in the flattened step index.
  std::vector<std::size_t> boundaries() const;

  TrajectoryRecord& operator[](std::size_t i) { return records_[i]; }
  const TrajectoryRecord& operator[](std::size_t i) const { return records_[i]; }

  /// Common length of all trajectories; throws when they differ.
  std::size_t horizon() const;

  /// Step t of every trajectory stacked as rows: observations (B x D).
  Eigen::MatrixXd observation_batch(std::size_t t) const;
  /// Step t of every trajectory stacked as rows: actions (B x 2).
  Eigen::MatrixXd action_batch(std::size_t t) const;
  /// Step t of every trajectory stacked as rows: policy-space draws (B x 2).
  Eigen::MatrixXd sample_batch(std::size_t t) const;

  bool targets_ready() const { return targets_ready_; }
  void mark_targets_ready() { targets_ready_ = true; }

  void clear() {
    records_.clear();
    targets_ready_ = false;
  }

 private:
  std::vector<TrajectoryRecord> records_;
  bool targets_ready_ = false;
};

}  // namespace ctxtraj::gail
