// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/data/expert.hpp"
#include "ctxtraj/data/scene.hpp"
#include "ctxtraj/env/rollout.hpp"
#include "ctxtraj/gail/buffer.hpp"
#include "ctxtraj/gail/config.hpp"
#include "ctxtraj/gail/losses.hpp"
#include "ctxtraj/nets/networks.hpp"
#include "ctxtraj/nets/optimizer.hpp"

#include <vector>

namespace ctxtraj::gail {

struct IterationReport {
  long iteration = 0;
  double disc_loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double mean_reward = 0.0;
};

/// Logged pairs of one expert track, observations already standardized.
struct ExpertTrack {
  std::size_t scene = 0;
  int vehicle = 0;
  std::vector<long> frames;
  std::vector<Eigen::RowVectorXd> observations;
  std::vector<Eigen::Vector2d> actions;
};

/// A rollout start that also indexes its matching expert window.
struct WindowStart {
  std::size_t scene = 0;
  std::size_t track = 0;  // into Trainer::experts()
  std::size_t pair = 0;   // first pair index in that track
  long frame = 0;
};

/// Environment-facing wrapper around a PolicyNet. The mixture lives in
/// standardized action space; each draw is mapped to metres and scaled back
/// inside the displacement cap. Log-probabilities refer to the draw.
class NetPolicy : public env::Policy {
 public:
  NetPolicy(const nets::PolicyNet& net, double displacement_cap, const env::Standardizer& actions)
      : net_(net), params_(net.params().values()), cap_(displacement_cap), actions_(actions) {}

  void reset(Eigen::Index batch) override;
  env::PolicyDecision act(const Eigen::MatrixXd& observations, Rng& rng) override;

 private:
  const nets::PolicyNet& net_;
  std::vector<Matrix> params_;
  std::vector<Matrix> state_;
  double cap_;
  const env::Standardizer& actions_;
};

/// Relative scale given to an action dimension the experts never vary.
inline constexpr double kUnusedActionScale = 1e-3;

/// Per-dimension action standardizer. A dimension that is constant across
/// the experts (lateral moves in a scene without lane changes) gets
/// kUnusedActionScale times the widest varying spread, so policy noise
/// cannot move it measurably.
env::Standardizer fit_action_scale(const Eigen::MatrixXd& moves);

/// Adversarial imitation trainer: rollouts, critic updates, reward
/// transform, advantage estimation and policy/value updates.
class Trainer {
 public:
  Trainer(const TrainConfig& config, const env::EnvConfig& env_config, std::vector<data::Scene> scenes);

  /// Runs one full adversarial iteration and returns its losses.
  IterationReport iterate();

  /// Valid windows of `horizon` steps, in deterministic order.
  const std::vector<WindowStart>& windows() const { return windows_; }
  std::vector<WindowStart> sample_windows(std::size_t count, Rng& rng) const;

  /// Policy rollouts from the given windows (buffer records discarded).
  std::vector<env::GeneratedTrajectory> generate(const std::vector<WindowStart>& starts, long horizon, Rng& rng) const;

  /// Logged positions of the expert over each window (horizon + 1 samples).
  std::vector<std::vector<Eigen::Vector2d>> expert_positions(const std::vector<WindowStart>& starts, long horizon) const;

  const TrainConfig& config() const { return config_; }
  const env::EnvConfig& env_config() const { return env_; }
  const std::vector<data::Scene>& scenes() const { return scenes_; }
  const std::vector<ExpertTrack>& experts() const { return experts_; }
  const RolloutBuffer& buffer() const { return buffer_; }

  // Mutable state, for checkpointing.
  nets::PolicyNet& policy() { return policy_; }
  nets::ParameterSet& policy_old() { return policy_old_; }
  nets::ValueNet& value() { return value_; }
  nets::DiscriminatorNet& discriminator() { return disc_; }
  nets::Optimizer& policy_optimizer() { return opt_policy_; }
  nets::Optimizer& value_optimizer() { return opt_value_; }
  nets::Optimizer& disc_optimizer() { return opt_disc_; }
  env::Standardizer& standardizer() { return standardizer_; }
  env::Standardizer& action_standardizer() { return action_standardizer_; }
  long& iteration() { return iteration_; }
  Rng& rng() { return rng_; }

  const nets::PolicyNet& policy() const { return policy_; }
  const nets::ValueNet& value() const { return value_; }
  const nets::DiscriminatorNet& discriminator() const { return disc_; }
  const nets::ParameterSet& policy_old() const { return policy_old_; }
  const nets::Optimizer& policy_optimizer() const { return opt_policy_; }
  const nets::Optimizer& value_optimizer() const { return opt_value_; }
  const nets::Optimizer& disc_optimizer() const { return opt_disc_; }
  const Rng& rng() const { return rng_; }
  const env::Standardizer& standardizer() const { return standardizer_; }
  const env::Standardizer& action_standardizer() const { return action_standardizer_; }
  long iteration() const { return iteration_; }

  /// Rebuilds standardized expert observations and actions after either
  /// standardizer changes.
  void restandardize();

 private:
  void build_experts();
  void collect(std::vector<WindowStart>& starts, Rng& rng);
  PairSequence generated_pairs() const;
  PairSequence expert_pairs(const std::vector<WindowStart>& starts) const;
  CriticMode critic_mode() const;
  double update_discriminator(const PairSequence& expert, const PairSequence& generated);
  double assign_rewards(const PairSequence& generated);
  void assign_advantages();
  void update_policy(IterationReport& report);

  TrainConfig config_;
  env::EnvConfig env_;
  std::vector<data::Scene> scenes_;
  std::vector<std::vector<data::ExpertPair>> raw_pairs_;
  std::vector<ExpertTrack> experts_;
  std::vector<WindowStart> windows_;
  env::Standardizer standardizer_;
  env::Standardizer action_standardizer_;

  Rng rng_;
  nets::PolicyNet policy_;
  nets::ParameterSet policy_old_;
  nets::ValueNet value_;
  nets::DiscriminatorNet disc_;
  nets::Optimizer opt_policy_;
  nets::Optimizer opt_value_;
  nets::Optimizer opt_disc_;
  RolloutBuffer buffer_;
  long iteration_ = 0;
};

}  // namespace ctxtraj::gail
