// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/diff/ops.hpp"

#include <functional>
#include <span>
#include <vector>

namespace ctxtraj::diff {

/// Gradients of a scalar `root` with respect to each node in `wrt`, in order.
/// Nodes the root does not depend on get zeros of their own shape.
std::vector<Matrix> backward(const Var& root, std::span<const Var> wrt);

/// Same as `backward`, but the backward pass is itself recorded on the tape,
/// so the returned gradients can be differentiated again.
std::vector<Var> backward_graph(const Var& root, std::span<const Var> wrt);

/// Scalar function of several tensor arguments, built on the given tape.
using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

/// Max over all coordinates of |analytic - central difference| / max(1, |analytic|).
double grad_check(const ScalarFunction& f, const std::vector<Matrix>& point, double eps);

inline double grad_check(const std::function<Var(const Var&)>& f, const Matrix& point, double eps) {
  return grad_check([&](Tape&, std::span<const Var> args) { return f(args[0]); }, std::vector<Matrix>{point}, eps);
}

}  // namespace ctxtraj::diff
