// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/data/scene.hpp"
#include "ctxtraj/env/environment.hpp"

#include <vector>

namespace ctxtraj::data {

/// Logged (observation, action) pair; the action is the next-frame position
/// minus the current one.
struct ExpertPair {
  long frame = 0;
  Eigen::VectorXd observation;  // raw, unstandardized
  env::EnvAction action;
};

/// One pair per consecutive frame pair of the ego track, in frame order.
std::vector<ExpertPair> expert_pairs(const Scene& scene, int ego_vehicle, const env::EnvConfig& config);

}  // namespace ctxtraj::data
