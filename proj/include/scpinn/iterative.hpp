#pragma once

#include <Eigen/Dense>
#include <vector>

namespace scpinn {

/// Classical stationary iterations u <- u + B^{-1}(h - A u), the linear
/// ancestors of the correction-augmented loss. Kept dense and simple; these
/// exist to demonstrate and test the correspondence, not to solve big
/// systems.
enum class LinearMethod { Richardson, Jacobi, GaussSeidel };

struct IterTrace {
  Eigen::VectorXd solution;
  std::vector<double> residual_norms;  // ||h - A u_k||_2 including the initial guess
};

/// Runs `iters` steps. xi is only read by Richardson (B = (1/xi) I);
/// Jacobi uses B = D, Gauss-Seidel B = D + L (forward substitution).
IterTrace linear_iterate(const Eigen::MatrixXd& A, const Eigen::VectorXd& h,
                         const Eigen::VectorXd& u0, LinearMethod method, double xi, int iters);

/// Treats the solution vector as the trainable parameters: each outer step
/// exactly minimizes || B (u - u_prev) + (A u_prev - h) ||^2 with
/// B = (1/xi) I, whose minimizer is u_prev + xi (h - A u_prev). Compares
/// that sequence against linear_iterate's Richardson run and returns the
/// maximum elementwise deviation across all steps. Up to roundoff the two
/// are the same recurrence; this pins the discrete correspondence the
/// correction loss is built on.
double linear_sc_equivalence(const Eigen::MatrixXd& A, const Eigen::VectorXd& h,
                             const Eigen::VectorXd& u0, double xi, int steps);

}  // namespace scpinn
