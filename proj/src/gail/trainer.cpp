// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/gail/trainer.hpp"

#include "ctxtraj/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctxtraj::gail {

using diff::Index;
namespace {

Matrix pair_rows(const Eigen::MatrixXd& observations, const Eigen::MatrixXd& actions) {
  Matrix out(observations.rows(), observations.cols() + actions.cols());
  out << observations, actions;
  return out;
}

}  // namespace

env::Standardizer fit_action_scale(const Eigen::MatrixXd& moves) {
  env::Standardizer s = env::Standardizer::fit(moves);
  double widest = 0.0;
  Eigen::Array<bool, Eigen::Dynamic, 1> flat(moves.cols());
  for (Index c = 0; c < moves.cols(); ++c) {
    flat(c) = (moves.col(c).array() == moves(0, c)).all();
    if (!flat(c)) widest = std::max(widest, s.stddev(c));
  }
  for (Index c = 0; c < moves.cols(); ++c)
    if (flat(c) && widest > 0.0) s.stddev(c) = kUnusedActionScale * widest;
  return s;
}

void NetPolicy::reset(Eigen::Index batch) {
  state_ = net_.gru().initial_state(Matrix(Matrix::Zero(batch, 1)), batch);
}

env::PolicyDecision NetPolicy::act(const Eigen::MatrixXd& observations, Rng& rng) {
  const nets::GmmParams<Matrix> g = net_.step<Matrix>(params_, observations, state_);
  env::PolicyDecision d;
  d.actions.resize(observations.rows(), 2);
  d.samples.resize(observations.rows(), 2);
  for (Index b = 0; b < observations.rows(); ++b) {
    const Eigen::Vector2d u = nets::gmm_sample(g, b, rng);
    d.samples.row(b) = u.transpose();
    Eigen::Vector2d a = actions_.mean + actions_.stddev.cwiseProduct(u);
    // Same norm as the environment's cap check, so rounding cannot disagree.
    const double n = std::hypot(a.x(), a.y());
    if (n > cap_) {
      a *= cap_ / n;
      while (std::hypot(a.x(), a.y()) > cap_) a *= 1.0 - 1e-12;
    }
    d.actions.row(b) = a.transpose();
  }
  d.log_probs = nets::gmm_log_prob(g, d.samples);
  return d;
}

Trainer::Trainer(const TrainConfig& config, const env::EnvConfig& env_config, std::vector<data::Scene> scenes)
    : config_(config), env_(env_config), scenes_(std::move(scenes)), rng_(config.seed) {
  config_.validate();
  env_.validate();
  if (scenes_.empty()) throw Error("gail", "no scenes to train on");
  build_experts();
  if (windows_.empty())
    throw Error("gail", "no expert window of " + std::to_string(config_.horizon) + " steps fits in the scenes");

  const Index obs = env::observation_size(env_.lanes);
  Rng init = rng_.split();
  policy_ = nets::PolicyNet(obs, config_.net, init);
  value_ = nets::ValueNet(obs, config_.net, init);
  disc_ = nets::DiscriminatorNet(obs, config_.net, init);
  policy_old_ = policy_.params();
  opt_policy_ = nets::Optimizer(config_.optimizer, config_.lr_policy, policy_.params());
  opt_value_ = nets::Optimizer(config_.optimizer, config_.lr_value, value_.params());
  opt_disc_ = nets::Optimizer(config_.optimizer, config_.lr_disc, disc_.params());
}

void Trainer::build_experts() {
  raw_pairs_.clear();
  for (std::size_t s = 0; s < scenes_.size(); ++s) {
    const data::Scene& scene = scenes_[s];
    if (std::abs(scene.dt - env_.dt) > 1e-9)
      throw Error("gail", "scene " + std::to_string(scene.scene_id) + " has dt " + std::to_string(scene.dt) +
                              ", environment expects " + std::to_string(env_.dt));
    for (const data::Track& track : scene.tracks) {
      if (track.size() < 2) continue;
      raw_pairs_.push_back(data::expert_pairs(scene, track.vehicle_id, env_));
      ExpertTrack e;
      e.scene = s;
      e.vehicle = track.vehicle_id;
      experts_.push_back(std::move(e));
    }
  }
  Index rows = 0;
  for (const auto& pairs : raw_pairs_) rows += static_cast<Index>(pairs.size());
  if (rows == 0) throw Error("gail", "scenes contain no expert pairs");
  Eigen::MatrixXd table(rows, env::observation_size(env_.lanes));
  Index r = 0;
  for (const auto& pairs : raw_pairs_)
    for (const auto& p : pairs) table.row(r++) = p.observation.transpose();
  standardizer_ = env::Standardizer::fit(table);
  Eigen::MatrixXd moves(rows, 2);
  r = 0;
  for (const auto& pairs : raw_pairs_)
    for (const auto& p : pairs) moves.row(r++) << p.action.dx, p.action.dy;
  action_standardizer_ = fit_action_scale(moves);
  restandardize();

  windows_.clear();
  const long h = config_.horizon;
  for (std::size_t k = 0; k < experts_.size(); ++k) {
    const ExpertTrack& e = experts_[k];
    const long last = scenes_[e.scene].last_frame();
    // A window needs h consecutive pairs and starts where acceleration is defined.
    for (std::size_t p = 2; p + static_cast<std::size_t>(h) <= e.frames.size(); ++p) {
      if (e.frames[p] + h > last) break;
      if (e.frames[p + static_cast<std::size_t>(h) - 1] != e.frames[p] + h - 1) continue;
      windows_.push_back({e.scene, k, p, e.frames[p]});
    }
  }
}

void Trainer::restandardize() {
  for (std::size_t k = 0; k < experts_.size(); ++k) {
    ExpertTrack& e = experts_[k];
    e.frames.clear();
    e.observations.clear();
    e.actions.clear();
    for (const auto& p : raw_pairs_[k]) {
      e.frames.push_back(p.frame);
      e.observations.push_back(standardizer_.apply(p.observation));
      e.actions.push_back(action_standardizer_.apply(Eigen::Vector2d(p.action.dx, p.action.dy)).transpose());
    }
  }
}

std::vector<WindowStart> Trainer::sample_windows(std::size_t count, Rng& rng) const {
  std::vector<WindowStart> out;
  out.reserve(count);
  if (count <= windows_.size()) {
    std::vector<std::size_t> idx(windows_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
      out.push_back(windows_[idx[i]]);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) out.push_back(windows_[rng.index(windows_.size())]);
  }
  return out;
}

void Trainer::collect(std::vector<WindowStart>& starts, Rng& rng) {
  // Rollouts run per scene; keep starts in the buffer's record order.
  std::stable_sort(starts.begin(), starts.end(),
                   [](const WindowStart& a, const WindowStart& b) { return a.scene < b.scene; });
  buffer_.clear();
  NetPolicy policy(policy_, env_.displacement_cap, action_standardizer_);
  std::size_t i = 0;
  while (i < starts.size()) {
    std::size_t j = i;
    std::vector<env::RolloutStart> group;
    for (; j < starts.size() && starts[j].scene == starts[i].scene; ++j)
      group.push_back({experts_[starts[j].track].vehicle, starts[j].frame});
    env::rollout(policy, scenes_[starts[i].scene], group, config_.horizon, env_, standardizer_, rng, buffer_);
    i = j;
  }
}

PairSequence Trainer::generated_pairs() const {
  PairSequence out;
  for (std::size_t t = 0; t < buffer_.horizon(); ++t)
    out.push_back(pair_rows(buffer_.observation_batch(t), action_standardizer_.apply_rows(buffer_.action_batch(t))));
  return out;
}

PairSequence Trainer::expert_pairs(const std::vector<WindowStart>& starts) const {
  const auto b = static_cast<Index>(starts.size());
  const Index d = env::observation_size(env_.lanes);
  PairSequence out;
  for (long t = 0; t < config_.horizon; ++t) {
    Matrix m(b, d + 2);
    for (Index i = 0; i < b; ++i) {
      const WindowStart& w = starts[static_cast<std::size_t>(i)];
      const ExpertTrack& e = experts_[w.track];
      const std::size_t k = w.pair + static_cast<std::size_t>(t);
      m.row(i).head(d) = e.observations[k];
      m.row(i).tail(2) = e.actions[k].transpose();
    }
    out.push_back(std::move(m));
  }
  return out;
}

CriticMode Trainer::critic_mode() const {
  return config_.use_wgan_gp ? CriticMode::Wasserstein : CriticMode::CrossEntropy;
}

double Trainer::update_discriminator(const PairSequence& expert, const PairSequence& generated) {
  double total = 0.0;
  for (int u = 0; u < config_.disc_updates; ++u) {
    diff::Tape tape;
    const std::vector<Var> p = disc_.params().bind(tape);
    const Critic critic = [&](const std::vector<Var>& pairs) { return disc_.score<Var>(p, pairs); };
    Var loss;
    if (config_.use_wgan_gp) {
      // Roles are passed swapped so that minimizing raises the score of
      // generated pairs; with r = -D the policy is then rewarded for
      // expert-like pairs.
      loss = wgan_gp_disc_loss(tape, critic, generated, expert, config_.gp_coefficient, rng_).loss;
    } else {
      loss = bce_disc_loss(tape, critic, expert, generated);
    }
    total += loss.scalar();
    opt_disc_.step(disc_.params(), diff::backward(loss, p));
  }
  return total / config_.disc_updates;
}

double Trainer::assign_rewards(const PairSequence& generated) {
  const std::vector<Matrix> p = disc_.params().values();
  const std::vector<Matrix> scores = disc_.score<Matrix>(p, generated);
  const CriticMode mode = critic_mode();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t b = 0; b < buffer_.trajectories(); ++b) {
    TrajectoryRecord& rec = buffer_[b];
    rec.rewards.resize(static_cast<Index>(rec.size()));
    for (std::size_t t = 0; t < rec.size(); ++t) {
      double r = reward_from_score(scores[t](static_cast<Index>(b), 0), mode);
      rec.rewards(static_cast<Index>(t)) = r;
      sum += r;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  if (config_.normalize_rewards) {
    double sq = 0.0;
    for (std::size_t b = 0; b < buffer_.trajectories(); ++b) sq += (buffer_[b].rewards.array() - mean).square().sum();
    const double sd = std::sqrt(sq / static_cast<double>(n));
    for (std::size_t b = 0; b < buffer_.trajectories(); ++b)
      buffer_[b].rewards = (buffer_[b].rewards.array() - mean) / (sd + 1e-8);
  }
  return mean;
}

void Trainer::assign_advantages() {
  const std::size_t h = buffer_.horizon();
  std::vector<Matrix> obs;
  for (std::size_t t = 0; t < h; ++t) obs.push_back(buffer_.observation_batch(t));
  const std::vector<Matrix> p = value_.params().values();
  const std::vector<Matrix> values = value_.forward<Matrix>(p, obs);

  for (std::size_t b = 0; b < buffer_.trajectories(); ++b) {
    TrajectoryRecord& rec = buffer_[b];
    // The window end is treated as the episode end: terminal value 0.
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Index>(h) + 1);
    for (std::size_t t = 0; t < h; ++t) v(static_cast<Index>(t)) = values[t](static_cast<Index>(b), 0);
    rec.values = v.head(static_cast<Index>(h));
    rec.advantages = gae(rec.rewards, v, config_.gamma, config_.gae_lambda);
    rec.returns = discounted_returns(rec.rewards, config_.gamma);
  }

  if (config_.normalize_advantages) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::size_t b = 0; b < buffer_.trajectories(); ++b) {
      sum += buffer_[b].advantages.sum();
      sq += buffer_[b].advantages.squaredNorm();
      n += buffer_[b].size();
    }
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean * mean));
    for (std::size_t b = 0; b < buffer_.trajectories(); ++b) {
      Eigen::VectorXd& a = buffer_[b].advantages;
      a = (a.array() - mean) / (sd + 1e-8);
    }
  }
  buffer_.mark_targets_ready();
}

void Trainer::update_policy(IterationReport& report) {
  if (!buffer_.targets_ready()) throw Error("gail", "policy update before advantages were assigned");
  const std::size_t h = buffer_.horizon();
  const auto batch = static_cast<Index>(buffer_.trajectories());
  const Index rows = static_cast<Index>(h) * batch;

  std::vector<Matrix> obs, actions;
  Matrix logp_old(rows, 1), adv(rows, 1), returns(rows, 1);
  for (std::size_t t = 0; t < h; ++t) {
    obs.push_back(buffer_.observation_batch(t));
    actions.push_back(buffer_.sample_batch(t));
    for (Index b = 0; b < batch; ++b) {
      const TrajectoryRecord& rec = buffer_[static_cast<std::size_t>(b)];
      const Index r = static_cast<Index>(t) * batch + b;
      logp_old(r, 0) = rec.log_prob_old[t];
      adv(r, 0) = rec.advantages(static_cast<Index>(t));
      returns(r, 0) = rec.returns(static_cast<Index>(t));
    }
  }

  const ClipRange clip = config_.clip_range();
  const int epochs = config_.use_ppo ? config_.ppo_epochs : 1;
  Matrix logp_last;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    diff::Tape tape;
    const std::vector<Var> pp = policy_.params().bind(tape);
    const std::vector<Var> vp = value_.params().bind(tape);
    std::vector<Var> obs_vars;
    for (const Matrix& m : obs) obs_vars.push_back(tape.constant(m));

    const std::vector<Var> logp_steps = policy_.log_probs<Var>(pp, obs_vars, actions);
    const Var logp = diff::concat(std::span<const Var>(logp_steps), 0);
    const std::vector<Var> v_steps = value_.forward<Var>(vp, obs_vars);
    const Var v = diff::concat(std::span<const Var>(v_steps), 0);

    const Var lp = config_.use_ppo ? ppo_policy_loss(logp, logp_old, adv, clip) : policy_gradient_loss(logp, logp_old, adv);
    const Var lv = value_loss(v, returns);
    const Var entropy = nets::entropy_estimate(logp);
    const Var total = total_loss(lp, lv, entropy, config_.c1, config_.c2);
    logp_last = logp.value();

    if (epoch == 0) {
      report.policy_loss = lp.scalar();
      report.value_loss = lv.scalar();
      report.entropy = entropy.scalar();
    }

    std::vector<Var> wrt = pp;
    wrt.insert(wrt.end(), vp.begin(), vp.end());
    const std::vector<Matrix> grads = diff::backward(total, wrt);
    const auto split = static_cast<std::ptrdiff_t>(pp.size());
    std::vector<Matrix> policy_grads(grads.begin(), grads.begin() + split);
    std::vector<Matrix> value_grads(grads.begin() + split, grads.end());
    nets::clip_global_norm(policy_grads, config_.max_grad_norm);
    nets::clip_global_norm(value_grads, config_.max_grad_norm);
    opt_policy_.step(policy_.params(), policy_grads);
    opt_value_.step(value_.params(), value_grads);
  }

  for (std::size_t t = 0; t < h; ++t)
    for (Index b = 0; b < batch; ++b) buffer_[static_cast<std::size_t>(b)].log_prob[t] = logp_last(static_cast<Index>(t) * batch + b, 0);
  policy_old_ = policy_.params();
}

IterationReport Trainer::iterate() {
  IterationReport report;
  report.iteration = iteration_;

  std::vector<WindowStart> starts = sample_windows(static_cast<std::size_t>(config_.batch), rng_);
  collect(starts, rng_);
  const PairSequence expert = expert_pairs(starts);
  const PairSequence generated = generated_pairs();

  report.disc_loss = update_discriminator(expert, generated);
  report.mean_reward = assign_rewards(generated);
  assign_advantages();
  update_policy(report);
  ++iteration_;
  return report;
}

std::vector<env::GeneratedTrajectory> Trainer::generate(const std::vector<WindowStart>& starts, long horizon,
                                                        Rng& rng) const {
  NetPolicy policy(policy_, env_.displacement_cap, action_standardizer_);
  RolloutBuffer scratch;
  // Starts are run one scene group at a time but reported in input order.
  std::vector<std::size_t> order(starts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return starts[a].scene < starts[b].scene; });
  std::vector<env::GeneratedTrajectory> sorted(starts.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::vector<env::RolloutStart> group;
    const std::size_t scene = starts[order[i]].scene;
    for (; j < order.size() && starts[order[j]].scene == scene; ++j)
      group.push_back({experts_[starts[order[j]].track].vehicle, starts[order[j]].frame});
    auto part = env::rollout(policy, scenes_[scene], group, horizon, env_, standardizer_, rng, scratch);
    for (std::size_t k = 0; k < part.size(); ++k) sorted[order[i + k]] = std::move(part[k]);
    i = j;
  }
  return sorted;
}

std::vector<std::vector<Eigen::Vector2d>> Trainer::expert_positions(const std::vector<WindowStart>& starts,
                                                                    long horizon) const {
  std::vector<std::vector<Eigen::Vector2d>> out;
  for (const WindowStart& w : starts) {
    const data::Track* track = scenes_[w.scene].find(experts_[w.track].vehicle);
    const auto i = track->index_of(w.frame);
    if (!i || *i + static_cast<std::size_t>(horizon) >= track->size())
      throw Error("gail", "expert track too short for a window of " + std::to_string(horizon) + " steps");
    std::vector<Eigen::Vector2d> pos;
    for (long t = 0; t <= horizon; ++t) pos.push_back(track->position(*i + static_cast<std::size_t>(t)));
    out.push_back(std::move(pos));
  }
  return out;
}

}  // namespace ctxtraj::gail
