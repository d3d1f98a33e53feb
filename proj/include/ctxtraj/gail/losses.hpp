// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/diff/backward.hpp"
#include "ctxtraj/error.hpp"
#include "ctxtraj/gail/config.hpp"
#include "ctxtraj/rng.hpp"

#include <Eigen/Core>

#include <functional>
#include <span>
#include <vector>

namespace ctxtraj::gail {

using diff::Matrix;
using diff::Var;

/// Advantages by the backward recursion A_t = delta_t + gamma lambda A_{t+1},
/// delta_t = r_t + gamma V(s_{t+1}) - V(s_t). `values` carries one extra
/// trailing entry: the value after the last step (0 at episode end).
Eigen::VectorXd gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values, double gamma, double lambda);

/// Return targets sum_l gamma^l r_{t+l} within one trajectory.
Eigen::VectorXd discounted_returns(const Eigen::VectorXd& rewards, double gamma);

/// Return targets for a flat reward array split into trajectories at
/// `boundaries` (start offsets).
Eigen::VectorXd discounted_returns(const Eigen::VectorXd& rewards, const std::vector<std::size_t>& boundaries,
                                   double gamma);

/// Largest |log ratio| passed to exp; beyond it the ratio saturates.
inline constexpr double kMaxLogRatio = 30.0;

/// rho = exp(logp_new - logp_old), with the log-ratio clamped to +-kMaxLogRatio.
template <class T>
T probability_ratio(const T& logp_new, const Matrix& logp_old) {
  return diff::exp(diff::clamp(diff::sub(logp_new, diff::lift(logp_new, logp_old)), -kMaxLogRatio, kMaxLogRatio));
}

/// -mean[min(rho A, clip(rho, low, high) A)].
template <class T>
T ppo_policy_loss(const T& logp_new, const Matrix& logp_old, const Matrix& advantages, ClipRange clip) {
  if (logp_new.rows() != logp_old.rows() || logp_old.rows() != advantages.rows())
    throw Error("gail", "policy loss inputs differ in length");
  const T ratio = probability_ratio(logp_new, logp_old);
  const T adv = diff::lift(logp_new, advantages);
  const T unclipped = diff::mul(ratio, adv);
  const T clipped = diff::mul(diff::clamp(ratio, clip.low, clip.high), adv);
  return diff::neg(diff::mean(diff::minimum(unclipped, clipped)));
}

template <class T>
T ppo_policy_loss(const T& logp_new, const Matrix& logp_old, const Matrix& advantages, double epsilon) {
  return ppo_policy_loss(logp_new, logp_old, advantages, ClipRange{1.0 - epsilon, 1.0 + epsilon});
}

/// Unclipped surrogate -mean(rho A), used when PPO is ablated.
template <class T>
T policy_gradient_loss(const T& logp_new, const Matrix& logp_old, const Matrix& advantages) {
  if (logp_new.rows() != logp_old.rows() || logp_old.rows() != advantages.rows())
    throw Error("gail", "policy loss inputs differ in length");
  const T ratio = probability_ratio(logp_new, logp_old);
  return diff::neg(diff::mean(diff::mul(ratio, diff::lift(logp_new, advantages))));
}

/// Mean squared error between predictions and targets.
template <class T>
T value_loss(const T& values, const Matrix& targets) {
  return diff::mean(diff::square(diff::sub(values, diff::lift(values, targets))));
}

/// Value loss against discounted-return targets built from per-trajectory rewards.
double value_loss(const Eigen::VectorXd& values, const Eigen::VectorXd& rewards,
                  const std::vector<std::size_t>& boundaries, double gamma);

/// L_policy + c1 L_value - c2 H.
template <class T>
T total_loss(const T& policy, const T& value, const T& entropy, double c1, double c2) {
  return diff::sub(diff::add(policy, diff::scale(value, c1)), diff::scale(entropy, c2));
}

enum class CriticMode { Wasserstein, CrossEntropy };

/// r = -score (Wasserstein); r = -log(1 - sigmoid(score) + 1e-8) (cross-entropy).
double reward_from_score(double score, CriticMode mode);

/// Per-step sequence batch: element t stacks step t of every sequence as rows.
using PairSequence = std::vector<Matrix>;

/// Maps a recorded pair sequence to one score column per step.
using Critic = std::function<std::vector<Var>(const std::vector<Var>&)>;

struct CriticLoss {
  Var loss;
  Var score_gap;  // E_gen[D] - E_exp[D]
  Var penalty;    // lambda E[(|grad D(x^)| - 1)^2]
};

/// E_gen[D] - E_exp[D] + lambda E[(|grad_x^ D(x^)|_2 - 1)^2].
///
/// Sequences are paired by a random bijection truncated to the smaller set
/// and interpolated as x^ = u x_exp + (1 - u) x_gen with one u ~ U(0,1) per
/// pair. The gradient is of the summed scores of the interpolated batch with
/// respect to each step's state-action row, so every (sequence, step) pair
/// contributes one norm. The penalty is recorded through a differentiable
/// backward pass and so stays differentiable in the critic's parameters.
CriticLoss wgan_gp_disc_loss(diff::Tape& tape, const Critic& critic, const PairSequence& expert,
                             const PairSequence& generated, double lambda, Rng& rng);

/// -mean log sigmoid(D(exp)) - mean log(1 - sigmoid(D(gen))).
Var bce_disc_loss(diff::Tape& tape, const Critic& critic, const PairSequence& expert, const PairSequence& generated);

}  // namespace ctxtraj::gail
