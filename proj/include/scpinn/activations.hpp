#pragma once

#include <Eigen/Core>
#include <string>
#include <string_view>

namespace scpinn {

enum class Act { Sin, Silu, Softplus };

Act act_from_name(std::string_view name);
std::string act_name(Act a);

/// n-th derivative of the activation at x, n = 0 meaning the value itself.
/// Supported up to n = 5: forward jets need orders <= 4 and backpropagating
/// through an order-4 coefficient consumes one extra derivative.
double act_deriv(Act a, int n, double x);

/// Fills psi[0..m] with derivatives 0..m at x. Cheaper than m+1 separate
/// act_deriv calls because the transcendental part is evaluated once.
void act_derivs(Act a, int m, double x, double* psi);

/// Array form of act_derivs for the batched network engine: psi[k] receives
/// the k-th derivative evaluated elementwise on z. Each psi[k] must already
/// have the shape of z.
void act_derivs(Act a, int m, const Eigen::ArrayXXd& z, Eigen::ArrayXXd* psi);

/// Numerically stable logistic sigmoid.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace scpinn
