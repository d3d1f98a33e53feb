// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/diff/ops.hpp"

#include "ctxtraj/error.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace ctxtraj::diff {
namespace {

std::string shape_of(const Matrix& m) {
  std::ostringstream out;
  out << "[" << m.rows() << "x" << m.cols() << "]";
  return out.str();
}

[[noreturn]] void shape_error(Op op, const std::string& detail) {
  throw Error("diffcore", std::string(op_name(op)) + " shape mismatch: " + detail);
}

bool is_scalar(const Matrix& m) { return m.rows() == 1 && m.cols() == 1; }

// Equal shapes, or one side 1x1.
template <class F>
Matrix broadcast(Op op, const Matrix& lhs, const Matrix& rhs, F&& f) {
  if (lhs.rows() == rhs.rows() && lhs.cols() == rhs.cols()) return f(lhs.array(), rhs.array()).matrix();
  if (is_scalar(rhs)) return f(lhs.array(), Matrix::Constant(lhs.rows(), lhs.cols(), rhs(0, 0)).array()).matrix();
  if (is_scalar(lhs)) return f(Matrix::Constant(rhs.rows(), rhs.cols(), lhs(0, 0)).array(), rhs.array()).matrix();
  shape_error(op, shape_of(lhs) + " vs " + shape_of(rhs));
}

Matrix softmax_rows(const Matrix& x) {
  const Eigen::VectorXd peak = x.rowwise().maxCoeff();
  Matrix e = (x.colwise() - peak).array().exp().matrix();
  const Eigen::VectorXd total = e.rowwise().sum();
  for (Index r = 0; r < e.rows(); ++r) e.row(r) /= total(r);
  return e;
}

Matrix logsumexp_rows(const Matrix& x) {
  const Eigen::VectorXd peak = x.rowwise().maxCoeff();
  const Eigen::VectorXd total = (x.colwise() - peak).array().exp().rowwise().sum();
  return (peak.array() + total.array().log()).matrix();
}

Matrix softplus_kernel(const Matrix& x) {
  return x.unaryExpr([](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); });
}

Matrix sigmoid_kernel(const Matrix& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Index extent(const Matrix& m, int axis) { return axis == 0 ? m.rows() : m.cols(); }

void check_axis(Op op, int axis) {
  if (axis != 0 && axis != 1) throw Error("diffcore", std::string(op_name(op)) + ": axis must be 0 or 1");
}

Matrix concat_kernel(const std::vector<const Matrix*>& parts, int axis) {
  if (parts.empty()) throw Error("diffcore", "concat of zero tensors");
  check_axis(Op::Concat, axis);
  const Matrix& first = *parts.front();
  Index total = 0;
  for (const Matrix* p : parts) {
    if (extent(*p, 1 - axis) != extent(first, 1 - axis)) shape_error(Op::Concat, shape_of(first) + " vs " + shape_of(*p));
    total += extent(*p, axis);
  }
  Matrix out = axis == 0 ? Matrix(total, first.cols()) : Matrix(first.rows(), total);
  Index offset = 0;
  for (const Matrix* p : parts) {
    if (axis == 0) {
      out.middleRows(offset, p->rows()) = *p;
    } else {
      out.middleCols(offset, p->cols()) = *p;
    }
    offset += extent(*p, axis);
  }
  return out;
}

Matrix compute(Op op, const std::vector<const Matrix*>& in, const OpAttrs& at) {
  auto arg = [&](std::size_t i) -> const Matrix& { return *in[i]; };
  switch (op) {
    case Op::Leaf:
    case Op::Constant:
      throw Error("diffcore", "leaf values are not computed");
    case Op::MatMul:
      if (arg(0).cols() != arg(1).rows()) shape_error(op, shape_of(arg(0)) + " * " + shape_of(arg(1)));
      return arg(0) * arg(1);
    case Op::Add:
      return broadcast(op, arg(0), arg(1), [](const auto& a, const auto& b) { return a + b; });
    case Op::Sub:
      return broadcast(op, arg(0), arg(1), [](const auto& a, const auto& b) { return a - b; });
    case Op::Mul:
      return broadcast(op, arg(0), arg(1), [](const auto& a, const auto& b) { return a * b; });
    case Op::Div:
      return broadcast(op, arg(0), arg(1), [](const auto& a, const auto& b) { return a / b; });
    case Op::Minimum:
      if (arg(0).rows() != arg(1).rows() || arg(0).cols() != arg(1).cols())
        shape_error(op, shape_of(arg(0)) + " vs " + shape_of(arg(1)));
      return arg(0).cwiseMin(arg(1));
    case Op::Scale:
      return arg(0) * at.a;
    case Op::AddScalar:
      return (arg(0).array() + at.a).matrix();
    case Op::Sigmoid:
      return sigmoid_kernel(arg(0));
    case Op::Tanh:
      return arg(0).array().tanh().matrix();
    case Op::Exp:
      return arg(0).array().exp().matrix();
    case Op::Log:
      return arg(0).array().log().matrix();
    case Op::Softplus:
      return softplus_kernel(arg(0));
    case Op::Softmax:
      return softmax_rows(arg(0));
    case Op::LogSumExp:
      return logsumexp_rows(arg(0));
    case Op::Square:
      return arg(0).array().square().matrix();
    case Op::Sqrt:
      return arg(0).array().sqrt().matrix();
    case Op::Sum:
      return Matrix::Constant(1, 1, arg(0).sum());
    case Op::Mean:
      if (arg(0).size() == 0) throw Error("diffcore", "mean of empty tensor");
      return Matrix::Constant(1, 1, arg(0).mean());
    case Op::Clamp:
      return arg(0).cwiseMax(at.a).cwiseMin(at.b);
    case Op::Norm:
      check_axis(op, at.axis);
      if (at.axis == 1) return arg(0).rowwise().norm();
      return arg(0).colwise().norm();
    case Op::Concat:
      return concat_kernel(in, at.axis);
    case Op::Slice: {
      check_axis(op, at.axis);
      if (at.begin < 0 || at.extent < 0 || at.begin + at.extent > extent(arg(0), at.axis))
        shape_error(op, "range [" + std::to_string(at.begin) + ", +" + std::to_string(at.extent) + ") of " + shape_of(arg(0)));
      if (at.axis == 0) return arg(0).middleRows(at.begin, at.extent);
      return arg(0).middleCols(at.begin, at.extent);
    }
    case Op::Pad: {
      check_axis(op, at.axis);
      const Matrix& x = arg(0);
      if (at.begin < 0 || at.begin + extent(x, at.axis) > at.extent)
        shape_error(op, shape_of(x) + " into extent " + std::to_string(at.extent));
      if (at.axis == 0) {
        Matrix out = Matrix::Zero(at.extent, x.cols());
        out.middleRows(at.begin, x.rows()) = x;
        return out;
      }
      Matrix out = Matrix::Zero(x.rows(), at.extent);
      out.middleCols(at.begin, x.cols()) = x;
      return out;
    }
    case Op::Tile:
      if (at.begin < 1 || at.extent < 1) shape_error(op, "repeat counts must be positive");
      return arg(0).replicate(at.begin, at.extent);
    case Op::TileSum: {
      const Matrix& x = arg(0);
      if (at.begin < 1 || at.extent < 1 || x.rows() % at.begin != 0 || x.cols() % at.extent != 0)
        shape_error(op, shape_of(x) + " is not a " + std::to_string(at.begin) + "x" + std::to_string(at.extent) + " grid");
      const Index br = x.rows() / at.begin;
      const Index bc = x.cols() / at.extent;
      Matrix out = Matrix::Zero(br, bc);
      for (Index i = 0; i < at.begin; ++i)
        for (Index j = 0; j < at.extent; ++j) out += x.block(i * br, j * bc, br, bc);
      return out;
    }
    case Op::Transpose:
      return arg(0).transpose();
  }
  throw Error("diffcore", "unknown primitive");
}

Matrix run(Op op, std::initializer_list<const Matrix*> in, const OpAttrs& attrs = {}) {
  return evaluate(op, std::vector<const Matrix*>(in), attrs);
}

Tape& tape_of(const Var& a, const Var& b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) throw Error("diffcore", "operands belong to different records");
  return *a.tape();
}

Var rec(Op op, const Var& x, const OpAttrs& attrs = {}) {
  if (!x.valid()) throw Error("diffcore", std::string(op_name(op)) + " on an unbound tensor");
  return x.tape()->record(op, {x.id()}, attrs);
}

Var rec(Op op, const Var& a, const Var& b) { return tape_of(a, b).record(op, {a.id(), b.id()}); }

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::Sigmoid: return "sigmoid";
    case Op::Tanh: return "tanh";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Softplus: return "softplus";
    case Op::Softmax: return "softmax";
    case Op::LogSumExp: return "logsumexp";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::Minimum: return "minimum";
    case Op::Clamp: return "clamp";
    case Op::Norm: return "norm";
    case Op::Concat: return "concat";
    case Op::Slice: return "slice";
    case Op::Pad: return "pad";
    case Op::Tile: return "tile";
    case Op::TileSum: return "tile_sum";
    case Op::Transpose: return "transpose";
  }
  return "?";
}

Matrix evaluate(Op op, const std::vector<const Matrix*>& inputs, const OpAttrs& attrs) {
  Matrix out = compute(op, inputs, attrs);
  if (!out.allFinite()) throw NonFiniteError(std::string(op_name(op)) + " produced a non-finite value");
  return out;
}

Var Tape::leaf(Matrix value) {
  if (!value.allFinite()) throw NonFiniteError("non-finite leaf value");
  nodes_.push_back(Node{Op::Leaf, {}, {}, std::move(value), true});
  return Var(this, size() - 1);
}

Var Tape::constant(Matrix value) {
  if (!value.allFinite()) throw NonFiniteError("non-finite constant value");
  nodes_.push_back(Node{Op::Constant, {}, {}, std::move(value), false});
  return Var(this, size() - 1);
}

Var Tape::record(Op op, std::vector<int> inputs, const OpAttrs& attrs) {
  std::vector<const Matrix*> values;
  values.reserve(inputs.size());
  bool requires_grad = false;
  for (int id : inputs) {
    if (id < 0 || id >= size()) throw Error("diffcore", "input node not in record");
    values.push_back(&nodes_[static_cast<std::size_t>(id)].value);
    requires_grad = requires_grad || nodes_[static_cast<std::size_t>(id)].requires_grad;
  }
  Matrix out = evaluate(op, values, attrs);
  nodes_.push_back(Node{op, std::move(inputs), attrs, std::move(out), requires_grad});
  return Var(this, size() - 1);
}

std::vector<Matrix> Tape::replay() const {
  std::vector<Matrix> values;
  values.reserve(nodes_.size());
  for (const Node& n : nodes_) {
    if (n.op == Op::Leaf || n.op == Op::Constant) {
      values.push_back(n.value);
      continue;
    }
    std::vector<const Matrix*> in;
    in.reserve(n.inputs.size());
    for (int id : n.inputs) in.push_back(&values[static_cast<std::size_t>(id)]);
    values.push_back(evaluate(n.op, in, n.attrs));
  }
  return values;
}

// Eager overloads.

Matrix matmul(const Matrix& a, const Matrix& b) { return run(Op::MatMul, {&a, &b}); }
Matrix add(const Matrix& a, const Matrix& b) { return run(Op::Add, {&a, &b}); }
Matrix sub(const Matrix& a, const Matrix& b) { return run(Op::Sub, {&a, &b}); }
Matrix mul(const Matrix& a, const Matrix& b) { return run(Op::Mul, {&a, &b}); }
Matrix div(const Matrix& a, const Matrix& b) { return run(Op::Div, {&a, &b}); }
Matrix minimum(const Matrix& a, const Matrix& b) { return run(Op::Minimum, {&a, &b}); }
Matrix sigmoid(const Matrix& x) { return run(Op::Sigmoid, {&x}); }
Matrix tanh(const Matrix& x) { return run(Op::Tanh, {&x}); }
Matrix exp(const Matrix& x) { return run(Op::Exp, {&x}); }
Matrix log(const Matrix& x) { return run(Op::Log, {&x}); }
Matrix softplus(const Matrix& x) { return run(Op::Softplus, {&x}); }
Matrix softmax(const Matrix& x) { return run(Op::Softmax, {&x}); }
Matrix logsumexp(const Matrix& x) { return run(Op::LogSumExp, {&x}); }
Matrix square(const Matrix& x) { return run(Op::Square, {&x}); }
Matrix sqrt(const Matrix& x) { return run(Op::Sqrt, {&x}); }
Matrix sum(const Matrix& x) { return run(Op::Sum, {&x}); }
Matrix mean(const Matrix& x) { return run(Op::Mean, {&x}); }
Matrix transpose(const Matrix& x) { return run(Op::Transpose, {&x}); }
Matrix scale(const Matrix& x, double f) { return run(Op::Scale, {&x}, {.a = f}); }
Matrix add_scalar(const Matrix& x, double c) { return run(Op::AddScalar, {&x}, {.a = c}); }
Matrix clamp(const Matrix& x, double lo, double hi) { return run(Op::Clamp, {&x}, {.a = lo, .b = hi}); }
Matrix norm(const Matrix& x, int axis) { return run(Op::Norm, {&x}, {.axis = axis}); }
Matrix concat(std::span<const Matrix> parts, int axis) {
  std::vector<const Matrix*> in;
  for (const Matrix& p : parts) in.push_back(&p);
  return evaluate(Op::Concat, in, {.axis = axis});
}
Matrix slice(const Matrix& x, int axis, Index begin, Index length) {
  return run(Op::Slice, {&x}, {.axis = axis, .begin = begin, .extent = length});
}
Matrix pad(const Matrix& x, int axis, Index begin, Index total) {
  return run(Op::Pad, {&x}, {.axis = axis, .begin = begin, .extent = total});
}
Matrix tile(const Matrix& x, Index r, Index c) { return run(Op::Tile, {&x}, {.begin = r, .extent = c}); }
Matrix tile_sum(const Matrix& x, Index r, Index c) { return run(Op::TileSum, {&x}, {.begin = r, .extent = c}); }

// Recorded overloads.

Var matmul(const Var& a, const Var& b) { return rec(Op::MatMul, a, b); }
Var add(const Var& a, const Var& b) { return rec(Op::Add, a, b); }
Var sub(const Var& a, const Var& b) { return rec(Op::Sub, a, b); }
Var mul(const Var& a, const Var& b) { return rec(Op::Mul, a, b); }
Var div(const Var& a, const Var& b) { return rec(Op::Div, a, b); }
Var minimum(const Var& a, const Var& b) { return rec(Op::Minimum, a, b); }
Var sigmoid(const Var& x) { return rec(Op::Sigmoid, x); }
Var tanh(const Var& x) { return rec(Op::Tanh, x); }
Var exp(const Var& x) { return rec(Op::Exp, x); }
Var log(const Var& x) { return rec(Op::Log, x); }
Var softplus(const Var& x) { return rec(Op::Softplus, x); }
Var softmax(const Var& x) { return rec(Op::Softmax, x); }
Var logsumexp(const Var& x) { return rec(Op::LogSumExp, x); }
Var square(const Var& x) { return rec(Op::Square, x); }
Var sqrt(const Var& x) { return rec(Op::Sqrt, x); }
Var sum(const Var& x) { return rec(Op::Sum, x); }
Var mean(const Var& x) { return rec(Op::Mean, x); }
Var transpose(const Var& x) { return rec(Op::Transpose, x); }
Var scale(const Var& x, double f) { return rec(Op::Scale, x, {.a = f}); }
Var add_scalar(const Var& x, double c) { return rec(Op::AddScalar, x, {.a = c}); }
Var clamp(const Var& x, double lo, double hi) { return rec(Op::Clamp, x, {.a = lo, .b = hi}); }
Var norm(const Var& x, int axis) { return rec(Op::Norm, x, {.axis = axis}); }
Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw Error("diffcore", "concat of zero tensors");
  std::vector<int> ids;
  for (const Var& p : parts) {
    if (p.tape() != parts.front().tape() || !p.valid()) throw Error("diffcore", "operands belong to different records");
    ids.push_back(p.id());
  }
  return parts.front().tape()->record(Op::Concat, std::move(ids), {.axis = axis});
}
Var slice(const Var& x, int axis, Index begin, Index length) {
  return rec(Op::Slice, x, {.axis = axis, .begin = begin, .extent = length});
}
Var pad(const Var& x, int axis, Index begin, Index total) {
  return rec(Op::Pad, x, {.axis = axis, .begin = begin, .extent = total});
}
Var tile(const Var& x, Index r, Index c) { return rec(Op::Tile, x, {.begin = r, .extent = c}); }
Var tile_sum(const Var& x, Index r, Index c) { return rec(Op::TileSum, x, {.begin = r, .extent = c}); }

}  // namespace ctxtraj::diff
