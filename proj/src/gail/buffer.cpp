// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/gail/buffer.hpp"

#include "ctxtraj/error.hpp"

namespace ctxtraj::gail {

std::size_t RolloutBuffer::begin_trajectory() {
  records_.emplace_back();
  targets_ready_ = false;
  return records_.size() - 1;
}

void RolloutBuffer::append(std::size_t trajectory, const Eigen::RowVectorXd& observation, const Eigen::Vector2d& action,
                           const Eigen::Vector2d& sample, const Eigen::RowVectorXd& next_observation, double log_prob,
                           double log_prob_old) {
  if (trajectory >= records_.size()) throw Error("gail", "append to an unknown trajectory");
  TrajectoryRecord& r = records_[trajectory];
  r.observations.push_back(observation);
  r.actions.push_back(action);
  r.samples.push_back(sample);
  r.next_observations.push_back(next_observation);
  r.log_prob.push_back(log_prob);
  r.log_prob_old.push_back(log_prob_old);
  targets_ready_ = false;
}

std::size_t RolloutBuffer::steps() const {
  std::size_t n = 0;
  for (const auto& r : records_) n += r.size();
  return n;
}

std::vector<std::size_t> RolloutBuffer::boundaries() const {
  std::vector<std::size_t> out;
  std::size_t offset = 0;
  for (const auto& r : records_) {
    out.push_back(offset);
    offset += r.size();
  }
  return out;
}

std::size_t RolloutBuffer::horizon() const {
  if (records_.empty()) throw Error("gail", "empty rollout buffer");
  const std::size_t h = records_.front().size();
  for (const auto& r : records_)
    if (r.size() != h) throw Error("gail", "trajectories in the buffer differ in length");
  return h;
}

Eigen::MatrixXd RolloutBuffer::observation_batch(std::size_t t) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(records_.size()), records_.front().observations.at(t).size());
  for (std::size_t b = 0; b < records_.size(); ++b) out.row(static_cast<Eigen::Index>(b)) = records_[b].observations.at(t);
  return out;
}

Eigen::MatrixXd RolloutBuffer::action_batch(std::size_t t) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(records_.size()), 2);
  for (std::size_t b = 0; b < records_.size(); ++b) out.row(static_cast<Eigen::Index>(b)) = records_[b].actions.at(t).transpose();
  return out;
}

Eigen::MatrixXd RolloutBuffer::sample_batch(std::size_t t) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(records_.size()), 2);
  for (std::size_t b = 0; b < records_.size(); ++b) out.row(static_cast<Eigen::Index>(b)) = records_[b].samples.at(t).transpose();
  return out;
}

}  // namespace ctxtraj::gail
