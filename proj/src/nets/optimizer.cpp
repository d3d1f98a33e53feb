// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/nets/optimizer.hpp"

#include "ctxtraj/error.hpp"

#include <cmath>

namespace ctxtraj::nets {

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw Error("nets", "unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Adam ? "adam" : "sgd"; }

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, const ParameterSet& params)
    : kind_(kind), learning_rate_(learning_rate) {
  if (kind_ == OptimizerKind::Adam) {
    for (const auto& p : params.items()) {
      m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
}

void Optimizer::step(ParameterSet& params, const std::vector<Matrix>& grads) {
  if (grads.size() != params.size()) throw Error("nets", "gradient count does not match parameter count");
  ++steps_;
  if (kind_ == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < grads.size(); ++i) params[i].value -= learning_rate_ * grads[i];
    return;
  }
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * grads[i];
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * grads[i].cwiseAbs2();
    const Matrix update = (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
    params[i].value -= learning_rate_ * update;
  }
}

double clip_global_norm(std::vector<Matrix>& grads, double max_norm) {
  double sq = 0.0;
  for (const Matrix& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm)
    for (Matrix& g : grads) g *= max_norm / norm;
  return norm;
}

}  // namespace ctxtraj::nets
