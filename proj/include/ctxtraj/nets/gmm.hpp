// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/diff/ops.hpp"
#include "ctxtraj/nets/gru.hpp"

#include <cmath>
#include <numbers>

namespace ctxtraj::nets {

/// Per-row mixture of K diagonal bivariate Gaussians. Means and scales are
/// laid out component-major: column 2k + d holds dimension d of component k.
template <class T>
struct GmmParams {
  T log_weights;  // B x K
  T weights;      // B x K
  T means;        // B x 2K
  T scales;       // B x 2K
};

/// Maps a hidden state to mixture parameters:
/// weights = softmax(logits), scales = softplus(pre_scale) + sigma_min.
class GmmHead {
 public:
  GmmHead() = default;
  GmmHead(ParameterSet& params, const std::string& prefix, Index hidden, int components, double sigma_min, Rng& rng,
          double mean_gain = 1.0, double initial_spread = 0.0)
      : components_(components), sigma_min_(sigma_min) {
    if (components < 1) throw Error("nets", "mixture needs at least one component");
    if (!(sigma_min > 0.0)) throw Error("nets", "sigma_min must be positive");
    if (initial_spread != 0.0 && !(initial_spread > sigma_min))
      throw Error("nets", "initial spread must exceed sigma_min");
    logits_ = Affine(params, prefix + ".logits", hidden, components, rng);
    means_ = Affine(params, prefix + ".means", hidden, 2 * components, rng);
    scales_ = Affine(params, prefix + ".scales", hidden, 2 * components, rng);
    params[means_.offset()].value *= mean_gain;
    if (initial_spread > 0.0) {
      // Inverse softplus of the excess over the floor.
      const double excess = initial_spread - sigma_min;
      params[scales_.offset() + 1].value.setConstant(excess + std::log(-std::expm1(-excess)));
    }
  }

  int components() const { return components_; }
  double sigma_min() const { return sigma_min_; }

  template <class T>
  GmmParams<T> operator()(std::span<const T> p, const T& hidden) const {
    const T logits = logits_(p, hidden);
    const T log_norm = diff::logsumexp(logits);
    return {
        diff::sub(logits, diff::tile(log_norm, 1, components_)),
        diff::softmax(logits),
        means_(p, hidden),
        diff::add_scalar(diff::softplus(scales_(p, hidden)), sigma_min_),
    };
  }

 private:
  int components_ = 0;
  double sigma_min_ = 1e-3;
  Affine logits_;
  Affine means_;
  Affine scales_;
};

/// Selector summing the two per-dimension columns of each component.
inline Matrix component_pairs(Index components) {
  Matrix s = Matrix::Zero(2 * components, components);
  for (Index k = 0; k < components; ++k) s(2 * k, k) = s(2 * k + 1, k) = 1.0;
  return s;
}

/// log sum_k w_k N(a; mu_k, diag(sigma_k^2)) per row; `actions` is B x 2.
template <class T>
T gmm_log_prob(const GmmParams<T>& g, const Matrix& actions) {
  const Index k = g.weights.cols();
  if (actions.cols() != 2 || actions.rows() != g.means.rows()) throw Error("nets", "actions must be B x 2 and match the batch");
  const T tiled = diff::lift(g.means, diff::tile(actions, 1, k));
  const T z = diff::div(diff::sub(tiled, g.means), g.scales);
  const T per_dim = diff::sub(diff::scale(diff::square(z), -0.5), diff::log(g.scales));
  const T per_component = diff::matmul(per_dim, diff::lift(g.means, component_pairs(k)));
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  return diff::logsumexp(diff::add(diff::add_scalar(per_component, -log_two_pi), g.log_weights));
}

/// Draws one action for `row`: a component from the weights, then
/// mu_k + sigma_k * standard normal.
inline Eigen::Vector2d gmm_sample(const GmmParams<Matrix>& g, Index row, Rng& rng) {
  const Index k_count = g.weights.cols();
  const double u = rng.uniform();
  double cumulative = 0.0;
  Index k = k_count - 1;
  for (Index c = 0; c < k_count; ++c) {
    cumulative += g.weights(row, c);
    if (u < cumulative) {
      k = c;
      break;
    }
  }
  Eigen::Vector2d a;
  for (Index d = 0; d < 2; ++d) a(d) = g.means(row, 2 * k + d) + g.scales(row, 2 * k + d) * rng.normal();
  return a;
}

/// Monte-Carlo entropy estimate -mean(log pi(a|s)) over the batch's own
/// sampled actions.
template <class T>
T entropy_estimate(const T& log_probs) {
  if (log_probs.rows() * log_probs.cols() == 0) throw Error("nets", "entropy estimate of an empty batch");
  return diff::neg(diff::mean(log_probs));
}

}  // namespace ctxtraj::nets
