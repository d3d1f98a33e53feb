// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/diff/backward.hpp"

#include "ctxtraj/error.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace ctxtraj::diff {
namespace {

// Values of existing nodes and fresh constants, as eager matrices.
struct Eager {
  using Value = Matrix;
  const Tape& tape;
  const Matrix& at(int id) const { return tape.value(id); }
  Matrix lift(Matrix m) const { return m; }
  Matrix add(const Matrix& a, const Matrix& b) const { return diff::add(a, b); }
};

// Values of existing nodes and fresh constants, as tape handles; every
// operation performed by a vector-Jacobian rule is recorded.
struct Recorded {
  using Value = Var;
  Tape& tape;
  Var at(int id) const { return Var(&tape, id); }
  Var lift(Matrix m) const { return tape.constant(std::move(m)); }
  Var add(const Var& a, const Var& b) const { return diff::add(a, b); }
};

bool is_scalar_shape(const Matrix& m) { return m.rows() == 1 && m.cols() == 1; }

template <class Algebra>
class Propagator {
 public:
  using T = typename Algebra::Value;

  // Only nodes that depend on some requested node receive gradients.
  Propagator(const Tape& tape, Algebra algebra, int root, std::span<const Var> wrt)
      : tape_(tape), alg_(algebra), grads_(static_cast<std::size_t>(root) + 1),
        relevant_(static_cast<std::size_t>(root) + 1, false) {
    for (const Var& v : wrt) relevant_[static_cast<std::size_t>(v.id())] = true;
    for (int id = 0; id <= root; ++id) {
      if (relevant_[static_cast<std::size_t>(id)]) continue;
      for (int in : tape_.node(id).inputs) {
        if (relevant_[static_cast<std::size_t>(in)]) {
          relevant_[static_cast<std::size_t>(id)] = true;
          break;
        }
      }
    }
  }

  void seed(int root) { grads_[static_cast<std::size_t>(root)] = alg_.lift(Matrix::Ones(1, 1)); }

  void run(int root) {
    for (int id = root; id >= 0; --id) {
      auto& g = grads_[static_cast<std::size_t>(id)];
      if (!g) continue;
      // The recorded algebra appends to the tape; copy what the rule needs.
      const Node& n = tape_.node(id);
      if (n.op == Op::Leaf || n.op == Op::Constant) continue;
      const Op op = n.op;
      const std::vector<int> inputs = n.inputs;
      const OpAttrs attrs = n.attrs;
      const T grad = *g;
      apply(op, inputs, attrs, id, grad);
    }
  }

  T result(const Var& v) const {
    const auto& g = grads_[static_cast<std::size_t>(v.id())];
    if (g) return *g;
    return alg_.lift(Matrix::Zero(v.rows(), v.cols()));
  }

 private:
  const Matrix& val(int id) const { return tape_.value(id); }

  void accumulate(int id, const T& contribution) {
    if (!wants(id)) return;
    auto& slot = grads_[static_cast<std::size_t>(id)];
    slot = slot ? alg_.add(*slot, contribution) : contribution;
  }

  // Sums a broadcast gradient back down to a 1x1 input.
  T reduce_to(int id, const T& g) const {
    if (is_scalar_shape(val(id)) && !(g.rows() == 1 && g.cols() == 1)) return diff::sum(g);
    return g;
  }

  bool wants(int id) const { return relevant_[static_cast<std::size_t>(id)] && tape_.node(id).requires_grad; }

  void apply(Op op, const std::vector<int>& in, const OpAttrs& at, int self, const T& g) {
    const int a = in.empty() ? -1 : in[0];
    const int b = in.size() > 1 ? in[1] : -1;
    switch (op) {
      case Op::Leaf:
      case Op::Constant:
        return;
      case Op::MatMul:
        if (wants(a)) accumulate(a, diff::matmul(g, diff::transpose(alg_.at(b))));
        if (wants(b)) accumulate(b, diff::matmul(diff::transpose(alg_.at(a)), g));
        return;
      case Op::Add:
        if (wants(a)) accumulate(a, reduce_to(a, g));
        if (wants(b)) accumulate(b, reduce_to(b, g));
        return;
      case Op::Sub:
        if (wants(a)) accumulate(a, reduce_to(a, g));
        if (wants(b)) accumulate(b, reduce_to(b, diff::neg(g)));
        return;
      case Op::Mul:
        if (wants(a)) accumulate(a, reduce_to(a, diff::mul(g, alg_.at(b))));
        if (wants(b)) accumulate(b, reduce_to(b, diff::mul(g, alg_.at(a))));
        return;
      case Op::Div:
        if (wants(a)) accumulate(a, reduce_to(a, diff::div(g, alg_.at(b))));
        if (wants(b)) accumulate(b, reduce_to(b, diff::neg(diff::mul(g, diff::div(alg_.at(self), alg_.at(b))))));
        return;
      case Op::Minimum: {
        const Matrix pick_a = (val(a).array() <= val(b).array()).template cast<double>().matrix();
        if (wants(a)) accumulate(a, diff::mul(g, alg_.lift(pick_a)));
        if (wants(b)) accumulate(b, diff::mul(g, alg_.lift((1.0 - pick_a.array()).matrix())));
        return;
      }
      case Op::Scale:
        accumulate(a, diff::scale(g, at.a));
        return;
      case Op::AddScalar:
        accumulate(a, g);
        return;
      case Op::Sigmoid: {
        const T y = alg_.at(self);
        accumulate(a, diff::mul(g, diff::mul(y, diff::rsub(1.0, y))));
        return;
      }
      case Op::Tanh:
        accumulate(a, diff::mul(g, diff::rsub(1.0, diff::square(alg_.at(self)))));
        return;
      case Op::Exp:
        accumulate(a, diff::mul(g, alg_.at(self)));
        return;
      case Op::Log:
        accumulate(a, diff::div(g, alg_.at(a)));
        return;
      case Op::Softplus:
        accumulate(a, diff::mul(g, diff::sigmoid(alg_.at(a))));
        return;
      case Op::Softmax: {
        const T y = alg_.at(self);
        const T inner = diff::sum_cols(diff::mul(g, y));
        accumulate(a, diff::mul(y, diff::sub(g, diff::tile(inner, 1, val(self).cols()))));
        return;
      }
      case Op::LogSumExp:
        accumulate(a, diff::mul(diff::tile(g, 1, val(a).cols()), diff::softmax(alg_.at(a))));
        return;
      case Op::Square:
        accumulate(a, diff::mul(g, diff::scale(alg_.at(a), 2.0)));
        return;
      case Op::Sqrt:
        accumulate(a, diff::div(diff::scale(g, 0.5), alg_.at(self)));
        return;
      case Op::Sum:
        accumulate(a, diff::tile(g, val(a).rows(), val(a).cols()));
        return;
      case Op::Mean:
        accumulate(a, diff::scale(diff::tile(g, val(a).rows(), val(a).cols()),
                                  1.0 / static_cast<double>(val(a).size())));
        return;
      case Op::Clamp: {
        const Matrix inside = ((val(a).array() >= at.a) && (val(a).array() <= at.b)).template cast<double>().matrix();
        accumulate(a, diff::mul(g, alg_.lift(inside)));
        return;
      }
      case Op::Norm: {
        // d|x|/dx = x/|x|, taken as 0 where |x| = 0.
        const Matrix& y = val(self);
        const Matrix zero_mask = (y.array() == 0.0).template cast<double>().matrix();
        const T safe = diff::add(alg_.at(self), alg_.lift(zero_mask));
        const T scaled = diff::div(g, safe);
        const T spread = at.axis == 1 ? diff::tile(scaled, 1, val(a).cols()) : diff::tile(scaled, val(a).rows(), 1);
        accumulate(a, diff::mul(spread, alg_.at(a)));
        return;
      }
      case Op::Concat: {
        Index offset = 0;
        for (int id : in) {
          const Index len = at.axis == 0 ? val(id).rows() : val(id).cols();
          if (wants(id)) accumulate(id, diff::slice(g, at.axis, offset, len));
          offset += len;
        }
        return;
      }
      case Op::Slice: {
        const Index total = at.axis == 0 ? val(a).rows() : val(a).cols();
        accumulate(a, diff::pad(g, at.axis, at.begin, total));
        return;
      }
      case Op::Pad: {
        const Index len = at.axis == 0 ? val(a).rows() : val(a).cols();
        accumulate(a, diff::slice(g, at.axis, at.begin, len));
        return;
      }
      case Op::Tile:
        accumulate(a, diff::tile_sum(g, at.begin, at.extent));
        return;
      case Op::TileSum:
        accumulate(a, diff::tile(g, at.begin, at.extent));
        return;
      case Op::Transpose:
        accumulate(a, diff::transpose(g));
        return;
    }
  }

  const Tape& tape_;
  Algebra alg_;
  std::vector<std::optional<T>> grads_;
  std::vector<bool> relevant_;
};

void validate(const Var& root, std::span<const Var> wrt) {
  if (!root.valid()) throw Error("diffcore", "backward from an unbound tensor");
  if (root.rows() != 1 || root.cols() != 1) throw Error("diffcore", "backward root is not a scalar");
  for (const Var& v : wrt) {
    if (v.tape() != root.tape() || v.id() < 0 || v.id() > root.id())
      throw Error("diffcore", "requested node is not in the root's record");
  }
}

}  // namespace

std::vector<Matrix> backward(const Var& root, std::span<const Var> wrt) {
  validate(root, wrt);
  const Tape& tape = *root.tape();
  Propagator<Eager> prop(tape, Eager{tape}, root.id(), wrt);
  prop.seed(root.id());
  prop.run(root.id());
  std::vector<Matrix> out;
  out.reserve(wrt.size());
  for (const Var& v : wrt) out.push_back(prop.result(v));
  return out;
}

std::vector<Var> backward_graph(const Var& root, std::span<const Var> wrt) {
  validate(root, wrt);
  Tape& tape = *root.tape();
  Propagator<Recorded> prop(tape, Recorded{tape}, root.id(), wrt);
  prop.seed(root.id());
  prop.run(root.id());
  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& v : wrt) out.push_back(prop.result(v));
  return out;
}

double grad_check(const ScalarFunction& f, const std::vector<Matrix>& point, double eps) {
  if (!(eps > 0.0)) throw Error("diffcore", "grad_check step must be positive");

  auto value_at = [&](const std::vector<Matrix>& args) {
    Tape tape;
    std::vector<Var> vars;
    for (const Matrix& m : args) vars.push_back(tape.leaf(m));
    const double v = f(tape, vars).scalar();
    if (!std::isfinite(v)) throw NonFiniteError("grad_check: non-finite function value near point");
    return v;
  };

  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Matrix& m : point) vars.push_back(tape.leaf(m));
    analytic = backward(f(tape, vars), vars);
  }

  double worst = 0.0;
  std::vector<Matrix> probe = point;
  for (std::size_t k = 0; k < point.size(); ++k) {
    for (Index i = 0; i < point[k].size(); ++i) {
      const double original = point[k].data()[i];
      probe[k].data()[i] = original + eps;
      const double up = value_at(probe);
      probe[k].data()[i] = original - eps;
      const double down = value_at(probe);
      probe[k].data()[i] = original;
      const double numeric = (up - down) / (2.0 * eps);
      const double exact = analytic[k].data()[i];
      worst = std::max(worst, std::abs(exact - numeric) / std::max(1.0, std::abs(exact)));
    }
  }
  return worst;
}

}  // namespace ctxtraj::diff
