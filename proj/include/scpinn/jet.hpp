#pragma once

#include <array>
#include <cassert>

#include "scpinn/activations.hpp"

namespace scpinn {

/// Truncated derivative stack of a univariate curve t -> f(t): the value and
/// derivatives d^k f / dt^k for k = 1..order (order <= 4). Coefficients are
/// plain derivatives, not Taylor coefficients, so c(2) of x^2 at x = 3 is 2.
///
/// S is the scalar the jet is built over: double for direct evaluation, a
/// reverse-tape variable when the jet itself must be differentiated with
/// respect to parameters. Arithmetic only ever touches coefficients
/// 0..order; slots above the order are never read.
template <class S>
class JetT {
 public:
  static constexpr int kMaxOrder = 4;

  JetT() : order_(0) {}

  void set_order(int order) {
    assert(order >= 0 && order <= kMaxOrder);
    order_ = order;
  }
  int order() const { return order_; }

  const S& c(int k) const {
    assert(k >= 0 && k <= order_);
    return c_[k];
  }
  S& c(int k) {
    assert(k >= 0 && k <= order_);
    return c_[k];
  }
  const S& value() const { return c_[0]; }

  friend JetT operator+(const JetT& a, const JetT& b) {
    assert(a.order_ == b.order_);
    JetT r;
    r.order_ = a.order_;
    for (int k = 0; k <= a.order_; ++k) r.c_[k] = a.c_[k] + b.c_[k];
    return r;
  }

  friend JetT operator-(const JetT& a, const JetT& b) {
    assert(a.order_ == b.order_);
    JetT r;
    r.order_ = a.order_;
    for (int k = 0; k <= a.order_; ++k) r.c_[k] = a.c_[k] - b.c_[k];
    return r;
  }

  /// Leibniz product: c_n = sum_k C(n,k) a_k b_{n-k}.
  friend JetT operator*(const JetT& a, const JetT& b) {
    assert(a.order_ == b.order_);
    const int m = a.order_;
    JetT r;
    r.order_ = m;
    r.c_[0] = a.c_[0] * b.c_[0];
    if (m >= 1) r.c_[1] = a.c_[1] * b.c_[0] + a.c_[0] * b.c_[1];
    if (m >= 2) r.c_[2] = a.c_[2] * b.c_[0] + 2.0 * (a.c_[1] * b.c_[1]) + a.c_[0] * b.c_[2];
    if (m >= 3)
      r.c_[3] = a.c_[3] * b.c_[0] + 3.0 * (a.c_[2] * b.c_[1]) + 3.0 * (a.c_[1] * b.c_[2]) +
                a.c_[0] * b.c_[3];
    if (m >= 4)
      r.c_[4] = a.c_[4] * b.c_[0] + 4.0 * (a.c_[3] * b.c_[1]) + 6.0 * (a.c_[2] * b.c_[2]) +
                4.0 * (a.c_[1] * b.c_[3]) + a.c_[0] * b.c_[4];
    return r;
  }

 private:
  std::array<S, kMaxOrder + 1> c_{};
  int order_;
};

/// Constant with respect to the jet variable. Only meaningful for scalar
/// types constructible from double; tape-backed jets build their
/// coefficients explicitly from tape constants.
template <class S>
JetT<S> jet_constant(S value, int order) {
  JetT<S> j;
  j.set_order(order);
  j.c(0) = std::move(value);
  for (int k = 1; k <= order; ++k) j.c(k) = S(0.0);
  return j;
}

/// The jet of the identity curve t -> t at t = value: derivative 1 is one.
template <class S>
JetT<S> jet_seed(S value, int order) {
  JetT<S> j = jet_constant(std::move(value), order);
  if (order >= 1) j.c(1) = S(1.0);
  return j;
}

/// Scale every coefficient by a value that is constant in the jet variable
/// (weights during a forward pass, frequency factors, physical constants).
template <class W, class S>
JetT<S> scale(const W& w, const JetT<S>& a) {
  JetT<S> r;
  r.set_order(a.order());
  for (int k = 0; k <= a.order(); ++k) r.c(k) = w * a.c(k);
  return r;
}

/// Add a jet-constant to the value slot (bias terms).
template <class S>
JetT<S> shift(const JetT<S>& a, const S& b) {
  JetT<S> r = a;
  r.c(0) = a.c(0) + b;
  return r;
}

/// Composition b = psi(a) by Faa di Bruno, given the table psi[k] of the
/// outer function's derivatives evaluated at a.value(), k = 0..order.
template <class S>
JetT<S> compose(const S* psi, const JetT<S>& a) {
  const int m = a.order();
  JetT<S> r;
  r.set_order(m);
  r.c(0) = psi[0];
  if (m >= 1) r.c(1) = psi[1] * a.c(1);
  if (m >= 2) r.c(2) = psi[2] * (a.c(1) * a.c(1)) + psi[1] * a.c(2);
  if (m >= 3)
    r.c(3) = psi[3] * (a.c(1) * a.c(1) * a.c(1)) + 3.0 * (psi[2] * (a.c(1) * a.c(2))) +
             psi[1] * a.c(3);
  if (m >= 4) {
    const S a1sq = a.c(1) * a.c(1);
    r.c(4) = psi[4] * (a1sq * a1sq) + 6.0 * (psi[3] * (a1sq * a.c(2))) +
             psi[2] * (3.0 * (a.c(2) * a.c(2)) + 4.0 * (a.c(1) * a.c(3))) + psi[1] * a.c(4);
  }
  return r;
}

/// Activation applied through a jet of plain doubles.
inline JetT<double> activate(Act a, const JetT<double>& x) {
  double psi[JetT<double>::kMaxOrder + 1];
  act_derivs(a, x.order(), x.value(), psi);
  return compose(psi, x);
}

using Jet = JetT<double>;

}  // namespace scpinn
