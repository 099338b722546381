#pragma once

#include <Eigen/Core>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scpinn/bundle.hpp"
#include "scpinn/errors.hpp"
#include "scpinn/network.hpp"
#include "scpinn/rng.hpp"

namespace scpinn {

enum class ProblemKind {
  AllenCahn,
  KdV,
  KuramotoSivashinsky,
  GrayScott,
  Cavity,
  Poisson1d,  // steady test problem with a known solution; not a benchmark
};

enum class BcKind {
  Periodic,       // paired faces per spatial axis, value and normal slope match
  CavityWalls,    // moving lid on top, no-slip elsewhere, corners owned by walls
  DirichletZero,  // value pinned to zero on the boundary
};

/// Everything the loss, sampler, trainer, and reference solvers need to know
/// about one benchmark problem. Coefficients are physical; gamma holds the
/// per-output diffusion scale used by the residual-smoothing term.
struct ProblemSpec {
  std::string name;
  ProblemKind kind;
  std::vector<std::string> axes;                  // spatial axes, then "t" if unsteady
  std::vector<std::pair<double, double>> bounds;  // per axis; time axis is (0, t_end)
  int spatial_dims = 1;
  bool time_dependent = true;
  std::map<std::string, double> coeff;
  std::vector<std::string> outputs;
  std::vector<double> gamma;  // per output
  BcKind bc = BcKind::Periodic;
  int n_equations = 1;

  /// Equation -> (output whose increment feeds the correction, whether the
  /// correction carries the smoothing Laplacian). Mass-conservation-style
  /// equations pair with pressure and use the plain increment.
  std::vector<std::pair<int, bool>> corr_map;

  int dim() const { return static_cast<int>(axes.size()); }
  int axis_t() const { return spatial_dims; }  // valid only when time_dependent

  /// Derivatives the PDE residual needs.
  DerivReq residual_req() const;
  /// Derivatives a snapshot evaluation needs: values plus spatial seconds
  /// for the Laplacian-bearing corrections.
  DerivReq snapshot_req() const;

  /// Initial condition of output `out` at spatial point xy (unsteady only).
  double ic(int out, std::span<const double> xy) const;
};

/// Builds one of the supported problems with defaults from the benchmark
/// set; overrides may adjust coefficients ("alpha", "Re", ..., "t_end",
/// "gamma_u", ...). Unknown names or out-of-range values throw ConfigError.
/// Gammas are derived from coefficients after overrides unless overridden
/// explicitly.
ProblemSpec make_problem(const std::string& name,
                         const std::map<std::string, double>& overrides = {});

/// Network input/range description matching the problem's axes.
void apply_problem_axes(const ProblemSpec& spec, NetworkConfig& net_cfg);

/// Collocation points for one optimizer step. Periodic problems carry
/// paired boundary points; Dirichlet problems carry tagged points with
/// target values for the constrained outputs.
struct PeriodicPairs {
  int axis;
  Eigen::MatrixXd lo, hi;  // same rows except for the paired axis
};

struct Batch {
  Eigen::MatrixXd interior;  // n x dim, spatial cube times (0, T]
  std::vector<PeriodicPairs> periodic;
  Eigen::MatrixXd bc_points;
  Eigen::MatrixXd bc_values;    // one column per constrained output
  std::vector<int> bc_outputs;  // indices into spec.outputs
  Eigen::MatrixXd ic_points;    // t = 0 plane
  Eigen::MatrixXd ic_values;    // one column per output
};

/// Draws a batch; consumes the generator deterministically (interior, then
/// boundary, then initial points), so equal seeds give equal batches.
Batch sample_batch(const ProblemSpec& spec, Rng& rng, int n_interior, int n_bc, int n_ic);

/// Extra per-equation source terms that depend on coordinates only (zero
/// for the benchmark problems; the Poisson test problem uses it). Computed
/// outside the generic residual so residual formulas stay closed under
/// {+, -, *, scale}.
Eigen::MatrixXd residual_source(const ProblemSpec& spec, const Eigen::MatrixXd& points);

/// PDE residual per equation over any scalar type. `source`, when present,
/// holds one S per equation, already lifted.
template <class S>
std::vector<S> pde_residual(const ProblemSpec& spec, const DerivBundle<S>& b,
                            const std::vector<S>* source = nullptr) {
  auto c = [&spec](const char* k) {
    auto it = spec.coeff.find(k);
    if (it == spec.coeff.end()) throw ConfigError(std::string("missing coefficient ") + k);
    return it->second;
  };
  std::vector<S> r;
  switch (spec.kind) {
    case ProblemKind::AllenCahn: {
      const S& u = b.value[0];
      r.push_back(b.deriv(0, spec.axis_t(), 1) - c("alpha") * b.deriv(0, 0, 2) +
                  c("delta") * (u * u * u - u));
      break;
    }
    case ProblemKind::KdV: {
      const S& u = b.value[0];
      r.push_back(b.deriv(0, spec.axis_t(), 1) + u * b.deriv(0, 0, 1) +
                  c("nu") * b.deriv(0, 0, 3));
      break;
    }
    case ProblemKind::KuramotoSivashinsky: {
      const S& u = b.value[0];
      r.push_back(b.deriv(0, spec.axis_t(), 1) + c("a1") * (u * b.deriv(0, 0, 1)) +
                  c("a2") * b.deriv(0, 0, 2) + c("a3") * b.deriv(0, 0, 4));
      break;
    }
    case ProblemKind::GrayScott: {
      const S& u = b.value[0];
      const S& v = b.value[1];
      const int t = spec.axis_t();
      S uvv = u * (v * v);
      r.push_back(b.deriv(0, t, 1) - c("eps1") * (b.deriv(0, 0, 2) + b.deriv(0, 1, 2)) -
                  c("b1") * (1.0 - u) + c("c1") * uvv);
      r.push_back(b.deriv(1, t, 1) - c("eps2") * (b.deriv(1, 0, 2) + b.deriv(1, 1, 2)) +
                  c("b2") * v - c("c2") * uvv);
      break;
    }
    case ProblemKind::Cavity: {
      const S& u = b.value[0];
      const S& v = b.value[1];
      const double inv_re = 1.0 / c("Re");
      r.push_back(u * b.deriv(0, 0, 1) + v * b.deriv(0, 1, 1) + b.deriv(2, 0, 1) -
                  inv_re * (b.deriv(0, 0, 2) + b.deriv(0, 1, 2)));
      r.push_back(u * b.deriv(1, 0, 1) + v * b.deriv(1, 1, 1) + b.deriv(2, 1, 1) -
                  inv_re * (b.deriv(1, 0, 2) + b.deriv(1, 1, 2)));
      r.push_back(b.deriv(0, 0, 1) + b.deriv(1, 1, 1));
      break;
    }
    case ProblemKind::Poisson1d: {
      r.push_back(-1.0 * b.deriv(0, 0, 2) - (*source)[0]);
      break;
    }
  }
  return r;
}

/// Sequential-correction term per equation:
///   S_e = (1/tau_sc) * F - (gamma_o / tau_alpha) * laplacian(F),
/// with F the paired output's increment between the current parameters and
/// the snapshot. Equations mapped without a Laplacian use the first part
/// only. Snapshot entries must already be constants of type S so nothing
/// propagates gradients into the previous parameter set.
template <class S>
std::vector<S> correction_term(const ProblemSpec& spec, const DerivBundle<S>& cur,
                               const DerivBundle<S>& snap, double tau_sc, double tau_alpha) {
  std::vector<S> out;
  out.reserve(spec.corr_map.size());
  for (auto [o, with_lap] : spec.corr_map) {
    S f = cur.value[static_cast<std::size_t>(o)] - snap.value[static_cast<std::size_t>(o)];
    S s = (1.0 / tau_sc) * f;
    if (with_lap) {
      S lap = cur.deriv(o, 0, 2) - snap.deriv(o, 0, 2);
      for (int a = 1; a < spec.spatial_dims; ++a)
        lap = lap + (cur.deriv(o, a, 2) - snap.deriv(o, a, 2));
      s = s - (spec.gamma[static_cast<std::size_t>(o)] / tau_alpha) * lap;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace scpinn
