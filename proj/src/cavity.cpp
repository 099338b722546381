#include "scpinn/cavity.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "scpinn/errors.hpp"

namespace scpinn {
namespace {

struct CavityState {
  Eigen::MatrixXd psi, omega;  // (i, j) = (x index, y index)
};

/// Thom's first-order wall closure: with psi = 0 on all walls, the adjacent
/// interior value determines the wall vorticity; the moving lid adds the
/// slip term. Side walls first, lid row last, so the lid owns its corners.
void wall_vorticity(CavityState& s, double h, double u_lid) {
  const Eigen::Index n = s.psi.rows();
  const double ih2 = 2.0 / (h * h);
  for (Eigen::Index j = 0; j < n; ++j) {
    s.omega(0, j) = -ih2 * s.psi(1, j);
    s.omega(n - 1, j) = -ih2 * s.psi(n - 2, j);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    s.omega(i, 0) = -ih2 * s.psi(i, 1);
    s.omega(i, n - 1) = -ih2 * s.psi(i, n - 2) - 2.0 * u_lid / h;
  }
}

/// One SOR sweep of laplace(psi) = -omega; returns the largest update.
double psi_sweep(CavityState& s, double h, double relax) {
  const Eigen::Index n = s.psi.rows();
  const double h2 = h * h;
  double dmax = 0.0;
  for (Eigen::Index j = 1; j < n - 1; ++j)
    for (Eigen::Index i = 1; i < n - 1; ++i) {
      const double cand = 0.25 * (s.psi(i + 1, j) + s.psi(i - 1, j) + s.psi(i, j + 1) +
                                  s.psi(i, j - 1) + h2 * s.omega(i, j));
      const double next = s.psi(i, j) + relax * (cand - s.psi(i, j));
      dmax = std::max(dmax, std::abs(next - s.psi(i, j)));
      s.psi(i, j) = next;
    }
  return dmax;
}

/// One under-relaxed Gauss-Seidel sweep of the steady vorticity transport
/// equation, advection from the current streamfunction; returns the largest
/// update.
double omega_sweep(CavityState& s, double h, double Re, double relax) {
  const Eigen::Index n = s.psi.rows();
  double dmax = 0.0;
  const double q = Re / 4.0;
  for (Eigen::Index j = 1; j < n - 1; ++j)
    for (Eigen::Index i = 1; i < n - 1; ++i) {
      const double we = s.omega(i + 1, j), ww = s.omega(i - 1, j);
      const double wn = s.omega(i, j + 1), ws = s.omega(i, j - 1);
      const double conv = q * ((s.psi(i, j + 1) - s.psi(i, j - 1)) * (we - ww) -
                               (s.psi(i + 1, j) - s.psi(i - 1, j)) * (wn - ws));
      const double cand = 0.25 * (we + ww + wn + ws - conv);
      const double next = s.omega(i, j) + relax * (cand - s.omega(i, j));
      dmax = std::max(dmax, std::abs(next - s.omega(i, j)));
      s.omega(i, j) = next;
    }
  return dmax;
}

void solve_level(CavityState& s, const CavityOptions& opt, int n) {
  const double h = 1.0 / (n - 1);
  const double wpsi =
      opt.psi_relax > 0.0 ? opt.psi_relax : 2.0 / (1.0 + std::sin(M_PI * h));
  const double womega =
      opt.omega_relax > 0.0 ? opt.omega_relax : std::min(1.0, 200.0 / opt.Re);

  for (long long outer = 0; outer < opt.max_outer; ++outer) {
    double dpsi = 0.0;
    for (int k = 0; k < opt.psi_sweeps; ++k) dpsi = psi_sweep(s, h, wpsi);
    wall_vorticity(s, h, opt.u_lid);
    const double domega = omega_sweep(s, h, opt.Re, womega);

    const double psi_scale = std::max(s.psi.cwiseAbs().maxCoeff(), 1e-12);
    const double omega_scale = std::max(s.omega.cwiseAbs().maxCoeff(), 1e-12);
    if (dpsi / psi_scale < opt.tol && domega / omega_scale < opt.tol) return;
    if (outer % 1000 == 999 && (!s.psi.allFinite() || !s.omega.allFinite()))
      throw NumericError("cavity solve produced nonfinite fields at Re=" +
                         std::to_string(opt.Re));
  }
  throw NumericError("cavity solve did not converge within " + std::to_string(opt.max_outer) +
                     " outer iterations (n=" + std::to_string(n) + ")");
}

/// Bilinear prolongation from n nodes per side to 2n-1.
CavityState prolong(const CavityState& c) {
  const Eigen::Index n = c.psi.rows();
  const Eigen::Index nf = 2 * n - 1;
  CavityState f{Eigen::MatrixXd::Zero(nf, nf), Eigen::MatrixXd::Zero(nf, nf)};
  auto lift = [&](const Eigen::MatrixXd& src, Eigen::MatrixXd& dst) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) dst(2 * i, 2 * j) = src(i, j);
    for (Eigen::Index i = 0; i + 1 < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        dst(2 * i + 1, 2 * j) = 0.5 * (src(i, j) + src(i + 1, j));
    for (Eigen::Index i = 0; i < nf; ++i)
      for (Eigen::Index j = 0; j + 2 < nf; j += 2)
        dst(i, j + 1) = 0.5 * (dst(i, j) + dst(i, j + 2));
  };
  lift(c.psi, f.psi);
  lift(c.omega, f.omega);
  return f;
}

}  // namespace

FieldGrid cavity_solve(const CavityOptions& opt) {
  if (!(opt.Re > 0.0) || opt.Re > 1000.0)
    throw ConfigError("cavity solver is validated for 0 < Re <= 1000");
  if (opt.n < 33 || opt.n % 2 == 0)
    throw ConfigError("cavity solver needs an odd grid of at least 33 nodes");
  if (!(opt.tol > 0.0)) throw ConfigError("tol must be positive");

  // Warm-start ladder: solve coarse grids first and prolong, halving while
  // the coarser level still meets the validity floor.
  std::vector<int> ladder{opt.n};
  while ((ladder.back() - 1) % 2 == 0 && (ladder.back() + 1) / 2 >= 33)
    ladder.push_back((ladder.back() + 1) / 2);

  CavityState s{Eigen::MatrixXd::Zero(ladder.back(), ladder.back()),
                Eigen::MatrixXd::Zero(ladder.back(), ladder.back())};
  for (auto it = ladder.rbegin(); it != ladder.rend(); ++it) {
    if (s.psi.rows() != *it) s = prolong(s);
    solve_level(s, opt, *it);
  }

  const int n = opt.n;
  const double h = 1.0 / (n - 1);
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n), v = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n - 1; ++i)
    for (int j = 1; j < n - 1; ++j) {
      u(i, j) = (s.psi(i, j + 1) - s.psi(i, j - 1)) / (2.0 * h);
      v(i, j) = -(s.psi(i + 1, j) - s.psi(i - 1, j)) / (2.0 * h);
    }
  for (int i = 0; i < n; ++i) u(i, n - 1) = opt.u_lid;

  FieldGrid g;
  g.problem = "cavity";
  g.axes = {{"x", n, 0.0, 1.0}, {"y", n, 0.0, 1.0}};
  Eigen::VectorXd fu(static_cast<Eigen::Index>(n) * n), fv(fu.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      fu[static_cast<Eigen::Index>(i) * n + j] = u(i, j);
      fv[static_cast<Eigen::Index>(i) * n + j] = v(i, j);
    }
  g.fields.push_back(std::move(fu));
  g.fields.push_back(std::move(fv));
  return g;
}

FieldGrid cavity_solve(double Re, int n, double tol) {
  CavityOptions opt;
  opt.Re = Re;
  opt.n = n;
  opt.tol = tol;
  return cavity_solve(opt);
}

}  // namespace scpinn
