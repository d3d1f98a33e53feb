// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/diff/ops.hpp"
#include "ctxtraj/error.hpp"
#include "ctxtraj/nets/parameters.hpp"

#include <span>
#include <string>
#include <vector>

namespace ctxtraj::nets {

/// Stacked GRU encoder. Rows are batch entries; each layer computes
///
///   z  = sigmoid(x Wz + h Uz + bz)
///   r  = sigmoid(x Wr + h Ur + br)
///   h~ = tanh(x Wh + (r . h) Uh + bh)
///   h' = (1 - z) . h + z . h~
class GruStack {
 public:
  static constexpr std::size_t kBlocksPerLayer = 9;

  GruStack() = default;

  GruStack(ParameterSet& params, const std::string& prefix, Index input_size, Index hidden_size, int num_layers, Rng& rng)
      : input_size_(input_size), hidden_size_(hidden_size), num_layers_(num_layers), offset_(params.size()) {
    if (input_size < 1 || hidden_size < 1 || num_layers < 1) throw Error("nets", "GRU sizes must be positive");
    for (int layer = 0; layer < num_layers; ++layer) {
      const Index in = layer == 0 ? input_size : hidden_size;
      const std::string base = prefix + ".layer" + std::to_string(layer) + ".";
      for (const char* gate : {"z", "r", "h"}) {
        params.add(base + "w_" + gate, init_weight(in, hidden_size, rng));
        params.add(base + "u_" + gate, init_weight(hidden_size, hidden_size, rng));
        params.add(base + "b_" + gate, zero_bias(hidden_size));
      }
    }
  }

  Index input_size() const { return input_size_; }
  Index hidden_size() const { return hidden_size_; }
  int num_layers() const { return num_layers_; }

  /// Zero initial state, one block per layer.
  template <class T>
  std::vector<T> initial_state(const T& like, Index batch) const {
    return std::vector<T>(static_cast<std::size_t>(num_layers_), diff::lift(like, Matrix::Zero(batch, hidden_size_)));
  }

  /// Advances every layer by one step; returns the top layer's new state.
  template <class T>
  T step(std::span<const T> p, const T& x, std::vector<T>& state) const {
    if (x.cols() != input_size_)
      throw Error("nets", "GRU input has " + std::to_string(x.cols()) + " features, expected " + std::to_string(input_size_));
    T input = x;
    for (int layer = 0; layer < num_layers_; ++layer) {
      const std::size_t o = offset_ + kBlocksPerLayer * static_cast<std::size_t>(layer);
      T& h = state[static_cast<std::size_t>(layer)];
      const T z = diff::sigmoid(affine2(p, o + 0, input, h));
      const T r = diff::sigmoid(affine2(p, o + 3, input, h));
      const T candidate = diff::tanh(affine2(p, o + 6, input, diff::mul(r, h)));
      h = diff::add(diff::mul(diff::rsub(1.0, z), h), diff::mul(z, candidate));
      input = h;
    }
    return input;
  }

  /// Runs the whole sequence from `state` and returns the top-layer state at
  /// each step.
  template <class T>
  std::vector<T> forward(std::span<const T> p, const std::vector<T>& sequence, std::vector<T> state) const {
    std::vector<T> out;
    out.reserve(sequence.size());
    for (const T& x : sequence) out.push_back(step(p, x, state));
    return out;
  }

 private:
  // x W + h U + b for the gate whose blocks start at `o`.
  template <class T>
  static T affine2(std::span<const T> p, std::size_t o, const T& x, const T& h) {
    return diff::add_row(diff::add(diff::matmul(x, p[o]), diff::matmul(h, p[o + 1])), p[o + 2]);
  }

  Index input_size_ = 0;
  Index hidden_size_ = 0;
  int num_layers_ = 0;
  std::size_t offset_ = 0;
};

/// Fully connected map x W + b.
class Affine {
 public:
  Affine() = default;
  Affine(ParameterSet& params, const std::string& prefix, Index in, Index out, Rng& rng) : offset_(params.size()) {
    params.add(prefix + ".w", init_weight(in, out, rng));
    params.add(prefix + ".b", zero_bias(out));
  }

  template <class T>
  T operator()(std::span<const T> p, const T& x) const {
    return diff::add_row(diff::matmul(x, p[offset_]), p[offset_ + 1]);
  }

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_ = 0;
};

}  // namespace ctxtraj::nets
