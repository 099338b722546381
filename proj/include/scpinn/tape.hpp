#pragma once

#include <Eigen/Core>
#include <cassert>
#include <cstdint>
#include <vector>

#include "scpinn/activations.hpp"
#include "scpinn/jet.hpp"

namespace scpinn {

/// Reverse-mode tape over scalar operations. This is the reference
/// differentiation path: simple enough to audit line by line and to check
/// against finite differences. The batched network engine must agree with it
/// to near machine precision; tests enforce that.
///
/// Values are computed eagerly as nodes are recorded. backward() runs one
/// linear reverse sweep, touching each node exactly once.
class Tape {
 public:
  enum class Op : std::uint8_t {
    Const,     // no inputs
    Param,     // no inputs, gradient slot in `slot`
    Add,       // a + b
    Sub,       // a - b
    Mul,       // a * b
    Neg,       // -a
    ScaleC,    // aux * a
    AddC,      // a + aux
    ActDeriv,  // n-th derivative of an activation at input a
  };

  struct Var {
    const static int kNull = -1;
    Tape* tape = nullptr;
    int id = kNull;
  };

  Var constant(double v) { return push(Op::Const, -1, -1, 0.0, v); }

  /// Differentiable leaf. slot indexes the gradient vector backward() fills.
  Var param(double v, int slot) {
    Var x = push(Op::Param, -1, -1, 0.0, v);
    nodes_[static_cast<std::size_t>(x.id)].slot = slot;
    return x;
  }

  double value(Var x) const { return nodes_[static_cast<std::size_t>(x.id)].val; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Number of nodes processed by the most recent backward sweep.
  std::size_t last_backward_visits() const { return last_visits_; }

  /// Accumulates d(loss)/d(param) into a fresh vector of n_slots entries.
  Eigen::VectorXd backward(Var loss, int n_slots) {
    assert(loss.tape == this && loss.id >= 0);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_slots);
    std::vector<double> adj(static_cast<std::size_t>(loss.id) + 1, 0.0);
    adj[static_cast<std::size_t>(loss.id)] = 1.0;
    last_visits_ = 0;
    for (int i = loss.id; i >= 0; --i) {
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      const double g = adj[static_cast<std::size_t>(i)];
      ++last_visits_;
      if (g == 0.0 && n.op != Op::Param) continue;
      switch (n.op) {
        case Op::Const: break;
        case Op::Param: grad[n.slot] += g; break;
        case Op::Add:
          adj[static_cast<std::size_t>(n.a)] += g;
          adj[static_cast<std::size_t>(n.b)] += g;
          break;
        case Op::Sub:
          adj[static_cast<std::size_t>(n.a)] += g;
          adj[static_cast<std::size_t>(n.b)] -= g;
          break;
        case Op::Mul:
          adj[static_cast<std::size_t>(n.a)] += g * nodes_[static_cast<std::size_t>(n.b)].val;
          adj[static_cast<std::size_t>(n.b)] += g * nodes_[static_cast<std::size_t>(n.a)].val;
          break;
        case Op::Neg: adj[static_cast<std::size_t>(n.a)] -= g; break;
        case Op::ScaleC: adj[static_cast<std::size_t>(n.a)] += g * n.aux; break;
        case Op::AddC: adj[static_cast<std::size_t>(n.a)] += g; break;
        case Op::ActDeriv: {
          // d/dx psi_n(x) = psi_{n+1}(x); the order bump is why scalar types
          // carry activation derivatives one past the jet order.
          const double x = nodes_[static_cast<std::size_t>(n.a)].val;
          adj[static_cast<std::size_t>(n.a)] +=
              g * act_deriv(static_cast<Act>(n.act_kind), n.act_order + 1, x);
          break;
        }
      }
    }
    return grad;
  }

  Var push(Op op, int a, int b, double aux, double val) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.aux = aux;
    n.val = val;
    nodes_.push_back(n);
    return Var{this, static_cast<int>(nodes_.size()) - 1};
  }

  Var push_act(Act kind, int order, Var x) {
    Var v = push(Op::ActDeriv, x.id, -1, 0.0, act_deriv(kind, order, value(x)));
    Node& n = nodes_.back();
    n.act_kind = static_cast<std::uint8_t>(kind);
    n.act_order = static_cast<std::uint8_t>(order);
    return v;
  }

 private:
  struct Node {
    Op op;
    std::uint8_t act_kind = 0;
    std::uint8_t act_order = 0;
    int a = -1;
    int b = -1;
    int slot = -1;
    double aux = 0.0;
    double val = 0.0;
  };

  std::vector<Node> nodes_;
  std::size_t last_visits_ = 0;
};

using Var = Tape::Var;

inline Var operator+(Var a, Var b) {
  assert(a.tape == b.tape);
  return a.tape->push(Tape::Op::Add, a.id, b.id, 0.0, a.tape->value(a) + b.tape->value(b));
}
inline Var operator-(Var a, Var b) {
  assert(a.tape == b.tape);
  return a.tape->push(Tape::Op::Sub, a.id, b.id, 0.0, a.tape->value(a) - b.tape->value(b));
}
inline Var operator*(Var a, Var b) {
  assert(a.tape == b.tape);
  return a.tape->push(Tape::Op::Mul, a.id, b.id, 0.0, a.tape->value(a) * b.tape->value(b));
}
inline Var operator-(Var a) {
  return a.tape->push(Tape::Op::Neg, a.id, -1, 0.0, -a.tape->value(a));
}
inline Var operator*(double c, Var a) {
  return a.tape->push(Tape::Op::ScaleC, a.id, -1, c, c * a.tape->value(a));
}
inline Var operator*(Var a, double c) { return c * a; }
inline Var operator+(Var a, double c) {
  return a.tape->push(Tape::Op::AddC, a.id, -1, c, a.tape->value(a) + c);
}
inline Var operator+(double c, Var a) { return a + c; }
inline Var operator-(Var a, double c) { return a + (-c); }
inline Var operator-(double c, Var a) { return (-a) + c; }

/// Derivative table over tape variables; backing node for each order so the
/// chain rule through psi_k costs one extra table lookup in reverse.
inline void act_derivs(Act a, int m, Var x, Var* psi) {
  for (int k = 0; k <= m; ++k) psi[k] = x.tape->push_act(a, k, x);
}

inline JetT<Var> activate(Act a, const JetT<Var>& x) {
  Var psi[JetT<Var>::kMaxOrder + 1];
  act_derivs(a, x.order(), x.value(), psi);
  return compose(psi, x);
}

}  // namespace scpinn
