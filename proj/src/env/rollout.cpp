// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/env/rollout.hpp"

#include "ctxtraj/error.hpp"

namespace ctxtraj::env {
namespace {

struct EgoRun {
  const data::Track* track = nullptr;
  EgoState state;
  int start_lane = 0;
  double start_y = 0.0;
  int lane = 0;
  std::size_t record = 0;
};

Eigen::RowVectorXd observe(const data::Scene& scene, const EgoRun& run, long frame, const EnvConfig& config,
                           const Standardizer& standardizer) {
  EgoContext ctx;
  ctx.position = {run.state.x, run.state.y};
  ctx.velocity = {run.state.vx, run.state.vy};
  ctx.lane = run.lane;
  ctx.exclude_vehicle = run.track->vehicle_id;
  const NeighborMatrix v = extract_neighbors(scene, ctx, frame, config.roi);
  return standardizer.apply(assemble_observation(run.state, v, run.lane, config.lanes));
}

}  // namespace

std::vector<GeneratedTrajectory> rollout(Policy& policy, const data::Scene& scene, const std::vector<RolloutStart>& starts,
                                         long horizon, const EnvConfig& config, const Standardizer& standardizer,
                                         Rng& rng, gail::RolloutBuffer& buffer) {
  if (horizon < 1) throw Error("env", "rollout horizon must be at least 1");
  if (starts.empty()) throw Error("env", "rollout needs at least one start");
  const long last = scene.last_frame();

  std::vector<EgoRun> runs(starts.size());
  std::vector<GeneratedTrajectory> out(starts.size());
  for (std::size_t b = 0; b < starts.size(); ++b) {
    const auto& s = starts[b];
    const data::Track* track = scene.find(s.ego_vehicle);
    if (track == nullptr) throw Error("env", "ego vehicle " + std::to_string(s.ego_vehicle) + " not in scene");
    const auto i = track->index_of(s.frame);
    if (!i) throw Error("env", "ego vehicle " + std::to_string(s.ego_vehicle) + " missing at frame " + std::to_string(s.frame));
    if (s.frame + horizon > last)
      throw Error("env", "scene too short: frame " + std::to_string(s.frame) + " + horizon " + std::to_string(horizon) +
                             " exceeds last frame " + std::to_string(last));
    EgoRun& r = runs[b];
    r.track = track;
    r.state = logged_state(*track, *i, scene.dt);
    r.start_lane = track->lane[*i];
    r.start_y = track->y[*i];
    r.lane = r.start_lane;
    r.record = buffer.begin_trajectory();
    out[b].source_vehicle = s.ego_vehicle;
    out[b].start_frame = s.frame;
    out[b].positions.push_back({r.state.x, r.state.y});
    out[b].lanes.push_back(r.lane);
  }

  const auto batch = static_cast<Eigen::Index>(starts.size());
  policy.reset(batch);
  Eigen::MatrixXd current(batch, observation_size(config.lanes));
  for (std::size_t b = 0; b < runs.size(); ++b) current.row(static_cast<Eigen::Index>(b)) = observe(scene, runs[b], starts[b].frame, config, standardizer);

  for (long t = 0; t < horizon; ++t) {
    const PolicyDecision decision = policy.act(current, rng);
    const Eigen::MatrixXd& samples = decision.samples.size() == 0 ? decision.actions : decision.samples;
    Eigen::MatrixXd next(batch, current.cols());
    for (std::size_t b = 0; b < runs.size(); ++b) {
      const auto row = static_cast<Eigen::Index>(b);
      EgoRun& r = runs[b];
      const EnvAction action{decision.actions(row, 0), decision.actions(row, 1)};
      r.state = step(r.state, action, config.dt, config.displacement_cap);
      r.lane = lane_after_shift(r.start_lane, r.state.y - r.start_y, config);
      next.row(row) = observe(scene, r, starts[b].frame + t + 1, config, standardizer);
      buffer.append(r.record, current.row(row), decision.actions.row(row).transpose(), samples.row(row).transpose(),
                    next.row(row), decision.log_probs(row), decision.log_probs(row));
      out[b].positions.push_back({r.state.x, r.state.y});
      out[b].lanes.push_back(r.lane);
    }
    current = std::move(next);
  }
  return out;
}

GeneratedTrajectory rollout(Policy& policy, const data::Scene& scene, int ego_vehicle, long start_frame, long horizon,
                            const EnvConfig& config, const Standardizer& standardizer, Rng& rng,
                            gail::RolloutBuffer& buffer) {
  return rollout(policy, scene, {RolloutStart{ego_vehicle, start_frame}}, horizon, config, standardizer, rng, buffer)
      .front();
}

}  // namespace ctxtraj::env
