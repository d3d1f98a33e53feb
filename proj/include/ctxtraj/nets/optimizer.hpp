// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/nets/parameters.hpp"

#include <string>
#include <vector>

namespace ctxtraj::nets {

enum class OptimizerKind { Sgd, Adam };

OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind kind);

/// Gradient step over one ParameterSet: plain SGD, or Adam (beta1 0.9,
/// beta2 0.999, eps 1e-8) when selected.
/// Rescales `grads` in place so their joint L2 norm is at most `max_norm`;
/// returns the norm before rescaling. A max_norm of 0 leaves them alone.
double clip_global_norm(std::vector<Matrix>& grads, double max_norm);

class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerKind kind, double learning_rate, const ParameterSet& params);

  void step(ParameterSet& params, const std::vector<Matrix>& grads);

  double learning_rate() const { return learning_rate_; }
  OptimizerKind kind() const { return kind_; }

  // Adam moments and step count, exposed for checkpointing.
  std::vector<Matrix>& first_moments() { return m_; }
  std::vector<Matrix>& second_moments() { return v_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }
  long long steps() const { return steps_; }
  void set_steps(long long n) { steps_ = n; }

 private:
  OptimizerKind kind_ = OptimizerKind::Sgd;
  double learning_rate_ = 0.0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long long steps_ = 0;
};

}  // namespace ctxtraj::nets
