// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/nets/networks.hpp"
#include "ctxtraj/nets/optimizer.hpp"

#include <cstdint>
#include <string>

namespace ctxtraj::gail {

/// Ratio interval of the clipped surrogate.
struct ClipRange {
  double low = 0.8;
  double high = 1.2;
};

/// How `ppo_epsilon` is read: as the half-width of [1 - eps, 1 + eps], or
/// ignored in favour of explicit [clip_low, clip_high] bounds.
enum class ClipMode { HalfWidth, Bounds };

struct TrainConfig {
  double lr_policy = 5e-5;
  double lr_value = 1e-4;
  double lr_disc = 1e-8;
  nets::OptimizerKind optimizer = nets::OptimizerKind::Sgd;

  double ppo_epsilon = 0.2;
  ClipMode clip_mode = ClipMode::HalfWidth;
  double clip_low = 0.95;
  double clip_high = 1.01;

  double gp_coefficient = 1.0;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double c1 = 0.5;
  double c2 = 0.01;
  bool normalize_advantages = true;
  bool normalize_rewards = false;  // per-batch zero mean, unit spread before GAE

  int disc_updates = 5;
  int ppo_epochs = 4;
  double max_grad_norm = 0.0;  // joint L2 cap on each policy/value step; 0 disables
  int batch = 8;
  long horizon = 64;

  bool use_ppo = true;
  bool use_wgan_gp = true;

  std::uint64_t seed = 7;
  nets::NetShape net;

  void validate() const;
  ClipRange clip_range() const;
};

}  // namespace ctxtraj::gail
