// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/env/environment.hpp"
#include "ctxtraj/gail/buffer.hpp"
#include "ctxtraj/rng.hpp"

#include <vector>

namespace ctxtraj::env {

/// Actions and their log-probabilities for a batch of observations.
struct PolicyDecision {
  Eigen::MatrixXd actions;    // B x 2, already within the displacement cap
  Eigen::MatrixXd samples;    // B x 2 draws the log-probabilities refer to; empty means `actions`
  Eigen::VectorXd log_probs;  // B
};

/// Batched, stateful action source driven by the environment.
class Policy {
 public:
  virtual ~Policy() = default;
  /// Starts `batch` fresh sequences.
  virtual void reset(Eigen::Index batch) = 0;
  /// One step for every sequence; `observations` are standardized rows.
  virtual PolicyDecision act(const Eigen::MatrixXd& observations, Rng& rng) = 0;
};

struct RolloutStart {
  int ego_vehicle = 0;
  long frame = 0;
};

/// Positions of one generated ego trajectory, horizon + 1 samples.
struct GeneratedTrajectory {
  int source_vehicle = 0;
  long start_frame = 0;
  std::vector<Eigen::Vector2d> positions;
  std::vector<int> lanes;
};

/// Runs the policy from each start in lockstep for `horizon` steps. The ego
/// starts from its logged state and is then moved only by policy actions;
/// every other vehicle is replayed from the log. One buffer record is
/// appended per start.
std::vector<GeneratedTrajectory> rollout(Policy& policy, const data::Scene& scene, const std::vector<RolloutStart>& starts,
                                         long horizon, const EnvConfig& config, const Standardizer& standardizer,
                                         Rng& rng, gail::RolloutBuffer& buffer);

/// Single-start convenience form.
GeneratedTrajectory rollout(Policy& policy, const data::Scene& scene, int ego_vehicle, long start_frame, long horizon,
                            const EnvConfig& config, const Standardizer& standardizer, Rng& rng,
                            gail::RolloutBuffer& buffer);

}  // namespace ctxtraj::env
