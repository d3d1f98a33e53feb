// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/gail/config.hpp"

#include "ctxtraj/error.hpp"

#include <cmath>

namespace ctxtraj::gail {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error("gail", message);
}

bool unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void TrainConfig::validate() const {
  // A zero rate freezes that network; negative or non-finite rates are rejected.
  for (double lr : {lr_policy, lr_value, lr_disc})
    require(std::isfinite(lr) && lr >= 0.0, "learning rates must be finite and nonnegative");
  require(std::isfinite(ppo_epsilon) && ppo_epsilon > 0.0, "ppo_epsilon must be positive");
  if (clip_mode == ClipMode::Bounds)
    require(std::isfinite(clip_low) && std::isfinite(clip_high) && clip_low < clip_high,
            "clip bounds must satisfy clip_low < clip_high");
  require(std::isfinite(gp_coefficient) && gp_coefficient >= 0.0, "gp_coefficient must be nonnegative");
  require(unit(gamma), "gamma must lie in [0, 1]");
  require(unit(gae_lambda), "gae_lambda must lie in [0, 1]");
  require(std::isfinite(c1) && std::isfinite(c2), "loss weights must be finite");
  require(disc_updates >= 1, "disc_updates must be at least 1");
  require(ppo_epochs >= 1, "ppo_epochs must be at least 1");
  require(std::isfinite(max_grad_norm) && max_grad_norm >= 0.0, "max_grad_norm must be finite and nonnegative");
  require(batch >= 1, "batch must be at least 1");
  require(horizon >= 1, "horizon must be at least 1");
  require(net.hidden >= 1 && net.layers >= 1 && net.disc_mlp >= 1, "network sizes must be positive");
  require(net.components >= 1, "mixture needs at least one component");
  require(net.sigma_min > 0.0, "sigma_min must be positive");
  require(std::isfinite(net.mean_head_gain), "mean_head_gain must be finite");
  require(net.initial_spread == 0.0 || net.initial_spread > net.sigma_min, "initial_spread must be 0 or exceed sigma_min");
}

ClipRange TrainConfig::clip_range() const {
  if (clip_mode == ClipMode::Bounds) return {clip_low, clip_high};
  return {1.0 - ppo_epsilon, 1.0 + ppo_epsilon};
}

}  // namespace ctxtraj::gail
