// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/diff/tape.hpp"

#include <span>
#include <vector>

// Primitive set, overloaded for eager `Matrix` values and recorded `Var`
// handles so network code can be written once as a template over either.
// Elementwise binary ops accept equal shapes or a 1x1 operand on either side.
// Softmax, LogSumExp act along the last axis (per row).

namespace ctxtraj::diff {

#define CTXTRAJ_DIFF_UNARY(name) \
  Matrix name(const Matrix& x);  \
  Var name(const Var& x);

#define CTXTRAJ_DIFF_BINARY(name)                   \
  Matrix name(const Matrix& lhs, const Matrix& rhs); \
  Var name(const Var& lhs, const Var& rhs);

CTXTRAJ_DIFF_BINARY(matmul)
CTXTRAJ_DIFF_BINARY(add)
CTXTRAJ_DIFF_BINARY(sub)
CTXTRAJ_DIFF_BINARY(mul)
CTXTRAJ_DIFF_BINARY(div)
CTXTRAJ_DIFF_BINARY(minimum)

CTXTRAJ_DIFF_UNARY(sigmoid)
CTXTRAJ_DIFF_UNARY(tanh)
CTXTRAJ_DIFF_UNARY(exp)
CTXTRAJ_DIFF_UNARY(log)
CTXTRAJ_DIFF_UNARY(softplus)
CTXTRAJ_DIFF_UNARY(softmax)
CTXTRAJ_DIFF_UNARY(logsumexp)
CTXTRAJ_DIFF_UNARY(square)
CTXTRAJ_DIFF_UNARY(sqrt)
CTXTRAJ_DIFF_UNARY(sum)
CTXTRAJ_DIFF_UNARY(mean)
CTXTRAJ_DIFF_UNARY(transpose)

#undef CTXTRAJ_DIFF_UNARY
#undef CTXTRAJ_DIFF_BINARY

Matrix scale(const Matrix& x, double factor);
Var scale(const Var& x, double factor);
Matrix add_scalar(const Matrix& x, double offset);
Var add_scalar(const Var& x, double offset);
Matrix clamp(const Matrix& x, double lo, double hi);
Var clamp(const Var& x, double lo, double hi);

/// Euclidean norm along `axis` (1: per row -> Rx1, 0: per column -> 1xC).
Matrix norm(const Matrix& x, int axis);
Var norm(const Var& x, int axis);

Matrix concat(std::span<const Matrix> parts, int axis);
Var concat(std::span<const Var> parts, int axis);
Matrix slice(const Matrix& x, int axis, Index begin, Index length);
Var slice(const Var& x, int axis, Index begin, Index length);
/// Embeds `x` into zeros of extent `total` along `axis`, starting at `begin`.
Matrix pad(const Matrix& x, int axis, Index begin, Index total);
Var pad(const Var& x, int axis, Index begin, Index total);
/// Repeats `x` as a (row_reps x col_reps) grid of blocks.
Matrix tile(const Matrix& x, Index row_reps, Index col_reps);
Var tile(const Var& x, Index row_reps, Index col_reps);
/// Sums a (row_reps x col_reps) grid of equal blocks into one block.
Matrix tile_sum(const Matrix& x, Index row_reps, Index col_reps);
Var tile_sum(const Var& x, Index row_reps, Index col_reps);

// Composites.

inline Matrix neg(const Matrix& x) { return scale(x, -1.0); }
inline Var neg(const Var& x) { return scale(x, -1.0); }

/// c - x
template <class T>
T rsub(double c, const T& x) {
  return add_scalar(scale(x, -1.0), c);
}

/// Per-row sum over columns: RxC -> Rx1.
template <class T>
T sum_cols(const T& x) {
  return tile_sum(x, 1, x.cols());
}

/// Adds a 1xC row to every row of an RxC block.
template <class T>
T add_row(const T& x, const T& row) {
  return add(x, tile(row, x.rows(), 1));
}

/// Constant with the same home as `like`: a tape constant for `Var`, the
/// value itself for `Matrix`.
inline Matrix lift(const Matrix&, Matrix value) { return value; }
inline Var lift(const Var& like, Matrix value) { return like.tape()->constant(std::move(value)); }

}  // namespace ctxtraj::diff
