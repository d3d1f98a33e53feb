// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/diff/tape.hpp"
#include "ctxtraj/rng.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace ctxtraj::nets {

using diff::Index;
using diff::Matrix;
using diff::Var;

struct Parameter {
  std::string name;
  Matrix value;
};

/// Flat, ordered list of named parameter blocks owned by one network.
/// Sub-modules remember the index of their first block.
class ParameterSet {
 public:
  std::size_t add(std::string name, Matrix value) {
    items_.push_back({std::move(name), std::move(value)});
    return items_.size() - 1;
  }

  std::size_t size() const { return items_.size(); }
  Parameter& operator[](std::size_t i) { return items_[i]; }
  const Parameter& operator[](std::size_t i) const { return items_[i]; }
  std::vector<Parameter>& items() { return items_; }
  const std::vector<Parameter>& items() const { return items_; }

  /// Every block as a trainable leaf on `tape`, in order.
  std::vector<Var> bind(diff::Tape& tape) const {
    std::vector<Var> out;
    out.reserve(items_.size());
    for (const auto& p : items_) out.push_back(tape.leaf(p.value));
    return out;
  }

  /// Every block as a plain value, for tape-free evaluation.
  std::vector<Matrix> values() const {
    std::vector<Matrix> out;
    out.reserve(items_.size());
    for (const auto& p : items_) out.push_back(p.value);
    return out;
  }

 private:
  std::vector<Parameter> items_;
};

/// Weight block drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
inline Matrix init_weight(Index fan_in, Index fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix w(fan_in, fan_out);
  for (Index j = 0; j < w.cols(); ++j)
    for (Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
  return w;
}

inline Matrix zero_bias(Index width) { return Matrix::Zero(1, width); }

}  // namespace ctxtraj::nets
