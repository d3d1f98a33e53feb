// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/data/expert.hpp"

#include "ctxtraj/error.hpp"

namespace ctxtraj::data {

std::vector<ExpertPair> expert_pairs(const Scene& scene, int ego_vehicle, const env::EnvConfig& config) {
  const Track* track = scene.find(ego_vehicle);
  if (track == nullptr) throw Error("data", "vehicle " + std::to_string(ego_vehicle) + " not in scene");
  if (track->size() < 2) throw Error("data", "track of vehicle " + std::to_string(ego_vehicle) + " is shorter than 2 frames");
  std::vector<ExpertPair> out;
  out.reserve(track->size() - 1);
  for (std::size_t i = 0; i + 1 < track->size(); ++i) {
    const long frame = track->frames[i];
    const env::EgoState z = env::logged_state(*track, i, scene.dt);
    const env::NeighborMatrix v = env::extract_neighbors(scene, ego_vehicle, frame, config.roi);
    ExpertPair pair;
    pair.frame = frame;
    pair.observation = env::assemble_observation(z, v, track->lane[i], config.lanes);
    pair.action = {track->x[i + 1] - track->x[i], track->y[i + 1] - track->y[i]};
    out.push_back(std::move(pair));
  }
  return out;
}

}  // namespace ctxtraj::data
