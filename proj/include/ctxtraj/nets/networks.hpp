// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/nets/gmm.hpp"
#include "ctxtraj/nets/gru.hpp"

#include <vector>

namespace ctxtraj::nets {

struct NetShape {
  Index hidden = 32;
  int layers = 1;
  int components = 2;
  double sigma_min = 1e-3;
  Index disc_mlp = 64;
  double mean_head_gain = 1.0;  // multiplier on the initial mixture-mean weights
  double initial_spread = 0.0;  // per-dimension scale at a zero hidden state; 0 keeps a zero pre-scale bias
};

/// Stochastic policy: GRU encoder over observations, mixture head per step.
class PolicyNet {
 public:
  PolicyNet() = default;
  PolicyNet(Index observation_size, const NetShape& shape, Rng& rng)
      : gru_(params_, "policy.gru", observation_size, shape.hidden, shape.layers, rng),
        head_(params_, "policy.head", shape.hidden, shape.components, shape.sigma_min, rng, shape.mean_head_gain,
              shape.initial_spread) {}

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const GruStack& gru() const { return gru_; }
  const GmmHead& head() const { return head_; }

  template <class T>
  GmmParams<T> step(std::span<const T> p, const T& observation, std::vector<T>& state) const {
    return head_(p, gru_.step(p, observation, state));
  }

  /// log pi(a_t | s_1..t) for every step of a batch of sequences.
  template <class T>
  std::vector<T> log_probs(std::span<const T> p, const std::vector<T>& observations, const std::vector<Matrix>& actions) const {
    if (observations.size() != actions.size()) throw Error("nets", "observation and action sequences differ in length");
    std::vector<T> out;
    if (observations.empty()) return out;
    auto state = gru_.initial_state(observations.front(), observations.front().rows());
    for (std::size_t t = 0; t < observations.size(); ++t) out.push_back(gmm_log_prob(step(p, observations[t], state), actions[t]));
    return out;
  }

 private:
  ParameterSet params_;
  GruStack gru_;
  GmmHead head_;
};

/// State-value estimate V(s_t) per step.
class ValueNet {
 public:
  ValueNet() = default;
  ValueNet(Index observation_size, const NetShape& shape, Rng& rng)
      : gru_(params_, "value.gru", observation_size, shape.hidden, shape.layers, rng),
        out_(params_, "value.out", shape.hidden, 1, rng) {}

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  template <class T>
  std::vector<T> forward(std::span<const T> p, const std::vector<T>& observations) const {
    std::vector<T> out;
    if (observations.empty()) return out;
    const auto hidden = gru_.forward(p, observations, gru_.initial_state(observations.front(), observations.front().rows()));
    for (const T& h : hidden) out.push_back(out_(p, h));
    return out;
  }

 private:
  ParameterSet params_;
  GruStack gru_;
  Affine out_;
};

/// Unbounded per-step score D(s_t, a_t): GRU over concatenated state-action
/// rows, then a one-hidden-layer tanh MLP.
class DiscriminatorNet {
 public:
  DiscriminatorNet() = default;
  DiscriminatorNet(Index observation_size, const NetShape& shape, Rng& rng)
      : gru_(params_, "disc.gru", observation_size + 2, shape.hidden, shape.layers, rng),
        hidden_(params_, "disc.mlp0", shape.hidden, shape.disc_mlp, rng),
        out_(params_, "disc.mlp1", shape.disc_mlp, 1, rng) {}

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  Index input_size() const { return gru_.input_size(); }

  /// Index of the final output bias block.
  std::size_t output_bias_index() const { return out_.offset() + 1; }

  template <class T>
  std::vector<T> score(std::span<const T> p, const std::vector<T>& pairs) const {
    if (pairs.empty()) throw Error("nets", "discriminator needs a nonempty sequence");
    std::vector<T> out;
    const auto hidden = gru_.forward(p, pairs, gru_.initial_state(pairs.front(), pairs.front().rows()));
    for (const T& h : hidden) out.push_back(out_(p, diff::tanh(hidden_(p, h))));
    return out;
  }

 private:
  ParameterSet params_;
  GruStack gru_;
  Affine hidden_;
  Affine out_;
};

}  // namespace ctxtraj::nets
