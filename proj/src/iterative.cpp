#include "scpinn/iterative.hpp"

#include <cmath>

#include "scpinn/errors.hpp"

namespace scpinn {

IterTrace linear_iterate(const Eigen::MatrixXd& A, const Eigen::VectorXd& h,
                         const Eigen::VectorXd& u0, LinearMethod method, double xi, int iters) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || h.size() != n || u0.size() != n)
    throw ConfigError("linear_iterate: shape mismatch");
  if (method == LinearMethod::Richardson && xi <= 0.0)
    throw ConfigError("linear_iterate: richardson step must be positive");
  for (Eigen::Index i = 0; i < n; ++i)
    if (A(i, i) == 0.0 && method != LinearMethod::Richardson)
      throw ConfigError("linear_iterate: zero diagonal");

  IterTrace tr;
  Eigen::VectorXd u = u0;
  Eigen::VectorXd r = h - A * u;
  Eigen::VectorXd delta(n);
  tr.residual_norms.push_back(r.norm());
  for (int k = 0; k < iters; ++k) {
    switch (method) {
      case LinearMethod::Richardson:
        u += xi * r;
        break;
      case LinearMethod::Jacobi:
        u += (r.array() / A.diagonal().array()).matrix();
        break;
      case LinearMethod::GaussSeidel:
        // (D + L) delta = r by forward substitution.
        for (Eigen::Index i = 0; i < n; ++i) {
          double s = r[i];
          for (Eigen::Index j = 0; j < i; ++j) s -= A(i, j) * delta[j];
          delta[i] = s / A(i, i);
        }
        u += delta;
        break;
    }
    r = h - A * u;
    tr.residual_norms.push_back(r.norm());
  }
  tr.solution = std::move(u);
  return tr;
}

double linear_sc_equivalence(const Eigen::MatrixXd& A, const Eigen::VectorXd& h,
                             const Eigen::VectorXd& u0, double xi, int steps) {
  Eigen::VectorXd u_it = u0;  // linear_iterate recurrence
  Eigen::VectorXd u_cf = u0;  // closed-form minimizer sequence
  double max_dev = 0.0;
  for (int k = 0; k < steps; ++k) {
    u_it += xi * (h - A * u_it);
    // Exact minimizer of ||B(u - u_prev) + (A u_prev - h)||^2, B = (1/xi) I:
    // the quadratic is zeroed by u = u_prev - B^{-1}(A u_prev - h).
    Eigen::VectorXd residual_prev = A * u_cf - h;
    u_cf = u_cf - xi * residual_prev;
    max_dev = std::max(max_dev, (u_it - u_cf).cwiseAbs().maxCoeff());
  }
  return max_dev;
}

}  // namespace scpinn
