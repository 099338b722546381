#pragma once

#include <vector>

#include "scpinn/fieldgrid.hpp"
#include "scpinn/problems.hpp"

namespace scpinn {

/// Fourier-spectral ETDRK4 reference integrator for the periodic unsteady
/// benchmarks. Transforms are dense matrix products, which keeps every step
/// reproducible and fast enough at reference resolutions.
struct SpectralOptions {
  int n_modes = 256;  // collocation points per spatial axis, must be even
  double dt = 1e-4;
  std::vector<double> snapshot_times;  // ascending, uniform, multiples of dt
  int contour_points = 32;             // quadrature nodes for the phi-functions
  int out_n = 0;  // 0 saves the collocation grid; else resamples on a closed
                  // [lo, hi] grid of this many points per spatial axis
};

/// Integrates the problem and returns a grid with the problem's axis order
/// (space, then time). Throws ConfigError for problems without a periodic
/// spectral form and NumericError if the solution blows up.
FieldGrid etdrk4_solve(const ProblemSpec& spec, const SpectralOptions& opt);

/// Self-refinement study: errors of runs at dt0/2^i (i < levels) against a
/// run two halvings finer, measured at the final snapshot.
struct ConvergenceLadder {
  std::vector<double> dts;
  std::vector<double> errors;  // relative L2 at t = T
  double order = 0.0;          // mean pairwise log2 error ratio
};

ConvergenceLadder etdrk4_ladder(const ProblemSpec& spec, int n_modes, double T, double dt0,
                                int levels);

}  // namespace scpinn
