#pragma once

#include "scpinn/fieldgrid.hpp"

namespace scpinn {

/// Steady lid-driven cavity reference solver on the unit square: second
/// order central differences in streamfunction/vorticity form, SOR on the
/// streamfunction, under-relaxed Gauss-Seidel on the vorticity transport,
/// wall vorticity closed with Thom's formula. Validated for Re <= 1000 on
/// odd grids of at least 33 nodes per side.
struct CavityOptions {
  double Re = 400.0;
  int n = 129;        // nodes per side, odd
  double tol = 1e-8;  // relative max-change stopping threshold
  double u_lid = 1.0;
  long long max_outer = 4'000'000;
  double psi_relax = 0.0;    // 0 picks the optimal SOR factor for the grid
  double omega_relax = 0.0;  // 0 picks a Reynolds-dependent under-relaxation
  int psi_sweeps = 3;        // streamfunction sweeps per outer iteration
};

/// Returns a grid with axes (x, y) and fields (u, v) derived from the
/// converged streamfunction. Throws NumericError if the iteration exceeds
/// max_outer or produces nonfinite values.
FieldGrid cavity_solve(const CavityOptions& opt);
FieldGrid cavity_solve(double Re, int n, double tol);

}  // namespace scpinn
