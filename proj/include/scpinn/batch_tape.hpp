#pragma once

#include <Eigen/Core>
#include <cassert>
#include <cstdint>
#include <vector>

namespace scpinn {

/// Reverse-mode tape whose scalars are whole batches: each node holds one
/// value per sample point. Residual and loss formulas are written once
/// against the generic scalar surface (+, -, *, scaling) and run here over
/// all points at once; the expensive network part lives outside, connected
/// through leaf nodes.
///
/// All binary ops require equal lengths. Reductions produce length-1 nodes;
/// backward() must start from a length-1 node.
class BatchTape {
 public:
  enum class Op : std::uint8_t { Const, Leaf, Add, Sub, Mul, Neg, ScaleC, AddC, Mean };

  struct BVar {
    BatchTape* tape = nullptr;
    int id = -1;
  };

  BVar constant(Eigen::ArrayXd v) { return push(Op::Const, -1, -1, 0.0, std::move(v)); }
  BVar constant(double v, Eigen::Index n) {
    return push(Op::Const, -1, -1, 0.0, Eigen::ArrayXd::Constant(n, v));
  }

  /// Values produced outside the tape (network engine outputs). Their
  /// adjoints are read back after backward() and handed to the producer.
  BVar leaf(Eigen::ArrayXd v) { return push(Op::Leaf, -1, -1, 0.0, std::move(v)); }

  /// Mean over all entries; the reduction used by every loss term.
  BVar mean(BVar a) {
    const Eigen::ArrayXd& v = value(a);
    return push(Op::Mean, a.id, -1, 0.0, Eigen::ArrayXd::Constant(1, v.mean()));
  }

  const Eigen::ArrayXd& value(BVar x) const { return nodes_[static_cast<std::size_t>(x.id)].val; }
  double scalar(BVar x) const {
    assert(value(x).size() == 1);
    return value(x)[0];
  }

  /// Seeds 1 at a scalar root and sweeps once; adjoints retrievable until
  /// the next backward() call.
  void backward(BVar root);
  const Eigen::ArrayXd& adjoint(BVar x) const {
    return adjoints_[static_cast<std::size_t>(x.id)];
  }
  bool has_adjoint(BVar x) const {
    return adjoints_[static_cast<std::size_t>(x.id)].size() > 0;
  }

  std::size_t size() const { return nodes_.size(); }

  BVar push(Op op, int a, int b, double aux, Eigen::ArrayXd val) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.aux = aux;
    n.val = std::move(val);
    nodes_.push_back(std::move(n));
    return BVar{this, static_cast<int>(nodes_.size()) - 1};
  }

 private:
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double aux = 0.0;
    Eigen::ArrayXd val;
  };

  std::vector<Node> nodes_;
  std::vector<Eigen::ArrayXd> adjoints_;
};

using BVar = BatchTape::BVar;

inline BVar operator+(BVar a, BVar b) {
  assert(a.tape == b.tape);
  return a.tape->push(BatchTape::Op::Add, a.id, b.id, 0.0, a.tape->value(a) + b.tape->value(b));
}
inline BVar operator-(BVar a, BVar b) {
  assert(a.tape == b.tape);
  return a.tape->push(BatchTape::Op::Sub, a.id, b.id, 0.0, a.tape->value(a) - b.tape->value(b));
}
inline BVar operator*(BVar a, BVar b) {
  assert(a.tape == b.tape);
  return a.tape->push(BatchTape::Op::Mul, a.id, b.id, 0.0, a.tape->value(a) * b.tape->value(b));
}
inline BVar operator-(BVar a) {
  return a.tape->push(BatchTape::Op::Neg, a.id, -1, 0.0, -a.tape->value(a));
}
inline BVar operator*(double c, BVar a) {
  return a.tape->push(BatchTape::Op::ScaleC, a.id, -1, c, c * a.tape->value(a));
}
inline BVar operator*(BVar a, double c) { return c * a; }
inline BVar operator+(BVar a, double c) {
  return a.tape->push(BatchTape::Op::AddC, a.id, -1, c, a.tape->value(a) + c);
}
inline BVar operator+(double c, BVar a) { return a + c; }
inline BVar operator-(BVar a, double c) { return a + (-c); }
inline BVar operator-(double c, BVar a) { return (-a) + c; }

}  // namespace scpinn
