// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace ctxtraj::diff {

/// Every differentiable quantity is a dense 2-D block of
/// doubles; scalars are 1x1, vectors are 1xN rows or Nx1 columns.
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  MatMul,
  Add,
  Sub,
  Mul,
  Div,
  Scale,
  AddScalar,
  Sigmoid,
  Tanh,
  Exp,
  Log,
  Softplus,
  Softmax,
  LogSumExp,
  Square,
  Sqrt,
  Sum,
  Mean,
  Minimum,
  Clamp,
  Norm,
  Concat,
  Slice,
  Pad,
  Tile,
  TileSum,
  Transpose,
};

const char* op_name(Op op);

/// Scalar/shape attributes of a primitive. Meaning depends on the op:
/// Scale/AddScalar use `a`; Clamp uses [a, b]; Norm/Concat/Slice/Pad use
/// `axis`; Slice/Pad use `begin` and `extent`; Tile/TileSum use the two
/// repeat counts in `begin` (rows) and `extent` (cols).
struct OpAttrs {
  double a = 0.0;
  double b = 0.0;
  int axis = 0;
  Index begin = 0;
  Index extent = 0;
};

struct Node {
  Op op = Op::Constant;
  std::vector<int> inputs;
  OpAttrs attrs;
  Matrix value;
  bool requires_grad = false;
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Ordered record of primitive applications. Entries are appended in
/// evaluation order, so every entry's inputs precede it.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Trainable input; gradients flow into it.
  Var leaf(Matrix value);
  /// Fixed input; gradients never flow into it.
  Var constant(Matrix value);

  /// Evaluates `op` on the given inputs and appends the result.
  Var record(Op op, std::vector<int> inputs, const OpAttrs& attrs = {});

  int size() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const Matrix& value(int id) const { return node(id).value; }

  /// Re-executes every recorded entry from the stored leaves and constants
  /// and returns the recomputed value of each node.
  std::vector<Matrix> replay() const;

 private:
  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

/// Forward kernel shared by recording, eager evaluation and replay.
Matrix evaluate(Op op, const std::vector<const Matrix*>& inputs, const OpAttrs& attrs);

}  // namespace ctxtraj::diff
