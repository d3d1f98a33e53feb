// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/gail/losses.hpp"

#include <cmath>
#include <numeric>

namespace ctxtraj::gail {

Eigen::VectorXd gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values, double gamma, double lambda) {
  if (values.size() != rewards.size() + 1)
    throw Error("gail", "GAE needs one more value than rewards (got " + std::to_string(values.size()) + " values for " +
                            std::to_string(rewards.size()) + " rewards)");
  Eigen::VectorXd adv(rewards.size());
  double running = 0.0;
  for (Eigen::Index t = rewards.size() - 1; t >= 0; --t) {
    const double delta = rewards(t) + gamma * values(t + 1) - values(t);
    running = delta + gamma * lambda * running;
    adv(t) = running;
  }
  return adv;
}

Eigen::VectorXd discounted_returns(const Eigen::VectorXd& rewards, double gamma) {
  Eigen::VectorXd out(rewards.size());
  double running = 0.0;
  for (Eigen::Index t = rewards.size() - 1; t >= 0; --t) {
    running = rewards(t) + gamma * running;
    out(t) = running;
  }
  return out;
}

Eigen::VectorXd discounted_returns(const Eigen::VectorXd& rewards, const std::vector<std::size_t>& boundaries,
                                   double gamma) {
  Eigen::VectorXd out(rewards.size());
  for (std::size_t k = 0; k < boundaries.size(); ++k) {
    const auto begin = static_cast<Eigen::Index>(boundaries[k]);
    const auto end = k + 1 < boundaries.size() ? static_cast<Eigen::Index>(boundaries[k + 1]) : rewards.size();
    if (begin > end || end > rewards.size()) throw Error("gail", "trajectory boundaries do not partition the rewards");
    out.segment(begin, end - begin) = discounted_returns(rewards.segment(begin, end - begin), gamma);
  }
  return out;
}

double value_loss(const Eigen::VectorXd& values, const Eigen::VectorXd& rewards,
                  const std::vector<std::size_t>& boundaries, double gamma) {
  if (values.size() != rewards.size()) throw Error("gail", "values and rewards differ in length");
  const Eigen::VectorXd targets = discounted_returns(rewards, boundaries, gamma);
  return value_loss<Matrix>(values, targets)(0, 0);
}

double reward_from_score(double score, CriticMode mode) {
  if (!std::isfinite(score)) throw Error("gail", "non-finite discriminator score");
  if (mode == CriticMode::Wasserstein) return -score;
  const double s = 1.0 / (1.0 + std::exp(-score));
  return -std::log(1.0 - s + 1e-8);
}

namespace {

std::vector<Var> constants(diff::Tape& tape, const PairSequence& seq) {
  std::vector<Var> out;
  out.reserve(seq.size());
  for (const Matrix& m : seq) out.push_back(tape.constant(m));
  return out;
}

Var mean_score(const std::vector<Var>& scores) {
  return diff::mean(diff::concat(std::span<const Var>(scores), 0));
}

void check_sets(const PairSequence& expert, const PairSequence& generated) {
  if (expert.empty() || generated.empty() || expert.front().rows() == 0 || generated.front().rows() == 0)
    throw Error("gail", "discriminator loss needs nonempty expert and generated sets");
}

std::vector<Eigen::Index> permutation(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = p.size(); i > 1; --i) std::swap(p[i - 1], p[rng.index(i)]);
  return p;
}

}  // namespace

CriticLoss wgan_gp_disc_loss(diff::Tape& tape, const Critic& critic, const PairSequence& expert,
                             const PairSequence& generated, double lambda, Rng& rng) {
  check_sets(expert, generated);
  if (!(lambda >= 0.0)) throw Error("gail", "gradient penalty coefficient must be nonnegative");
  if (expert.size() != generated.size()) throw Error("gail", "expert and generated sequences differ in length");

  CriticLoss out;
  out.score_gap = diff::sub(mean_score(critic(constants(tape, generated))), mean_score(critic(constants(tape, expert))));

  if (lambda == 0.0) {
    out.penalty = tape.constant(Matrix::Zero(1, 1));
    out.loss = diff::add(out.score_gap, out.penalty);
    return out;
  }

  const Eigen::Index n = std::min(expert.front().rows(), generated.front().rows());
  const auto pe = permutation(expert.front().rows(), rng);
  const auto pg = permutation(generated.front().rows(), rng);
  Eigen::VectorXd u(n);
  for (Eigen::Index i = 0; i < n; ++i) u(i) = rng.uniform();

  std::vector<Var> mixed;
  mixed.reserve(expert.size());
  for (std::size_t t = 0; t < expert.size(); ++t) {
    Matrix x(n, expert[t].cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      x.row(i) = u(i) * expert[t].row(pe[static_cast<std::size_t>(i)]) +
                 (1.0 - u(i)) * generated[t].row(pg[static_cast<std::size_t>(i)]);
    }
    mixed.push_back(tape.leaf(std::move(x)));
  }
  const std::vector<Var> scores = critic(mixed);
  const Var total = diff::sum(diff::concat(std::span<const Var>(scores), 0));
  const std::vector<Var> grads = diff::backward_graph(total, mixed);

  std::vector<Var> norms;
  norms.reserve(grads.size());
  for (const Var& g : grads) norms.push_back(diff::norm(g, 1));
  const Var deviation = diff::add_scalar(diff::concat(std::span<const Var>(norms), 0), -1.0);
  out.penalty = diff::scale(diff::mean(diff::square(deviation)), lambda);
  out.loss = diff::add(out.score_gap, out.penalty);
  return out;
}

Var bce_disc_loss(diff::Tape& tape, const Critic& critic, const PairSequence& expert, const PairSequence& generated) {
  check_sets(expert, generated);
  const auto stack = [](const std::vector<Var>& s) { return diff::concat(std::span<const Var>(s), 0); };
  // -log sigmoid(x) = softplus(-x); -log(1 - sigmoid(x)) = softplus(x).
  const Var expert_term = diff::mean(diff::softplus(diff::neg(stack(critic(constants(tape, expert))))));
  const Var generated_term = diff::mean(diff::softplus(stack(critic(constants(tape, generated)))));
  return diff::add(expert_term, generated_term);
}

}  // namespace ctxtraj::gail
