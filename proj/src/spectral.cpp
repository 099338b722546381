#include "scpinn/spectral.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>

#include "scpinn/errors.hpp"

namespace scpinn {
namespace {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using CArr = Eigen::ArrayXcd;

CMat dft_matrix(int n) {
  CMat F(n, n);
  const double w = -2.0 * M_PI / static_cast<double>(n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l)
      F(j, l) = std::polar(1.0, w * static_cast<double>((static_cast<long long>(j) * l) % n));
  return F;
}

CMat idft_matrix(const CMat& F) { return F.conjugate() / static_cast<double>(F.rows()); }

Eigen::ArrayXd wavenumbers(int n, double L, bool zero_nyquist) {
  Eigen::ArrayXd k(n);
  for (int j = 0; j < n; ++j) {
    int f = j <= n / 2 ? j : j - n;
    if (zero_nyquist && 2 * j == n) f = 0;
    k[j] = 2.0 * M_PI * static_cast<double>(f) / L;
  }
  return k;
}

/// Spectral zero-padding onto a 3/2 grid, with the Nyquist coefficient split
/// across both halves so the padded interpolant matches pointwise.
CMat pad_matrix(int n, int m) {
  CMat P = CMat::Zero(m, n);
  const double s = static_cast<double>(m) / n;
  const int h = n / 2;
  for (int j = 0; j < h; ++j) P(j, j) = s;
  for (int j = h + 1; j < n; ++j) P(m - (n - j), j) = s;
  P(h, h) = 0.5 * s;
  P(m - h, h) = 0.5 * s;
  return P;
}

CMat trunc_matrix(int n, int m) {
  CMat T = CMat::Zero(n, m);
  const double s = static_cast<double>(n) / m;
  const int h = n / 2;
  for (int j = 0; j < h; ++j) T(j, j) = s;
  for (int j = h + 1; j < n; ++j) T(j, m - (n - j)) = s;
  T(h, h) = s;
  T(h, m - h) += s;
  return T;
}

/// Synthesis of a real field from its unnormalized spectrum at arbitrary
/// points; the Nyquist mode enters as a cosine so values stay real.
CMat synth_matrix(int n, double lo, double L, const Eigen::VectorXd& x) {
  CMat S(x.size(), n);
  for (Eigen::Index p = 0; p < x.size(); ++p) {
    const double xs = x[p] - lo;
    for (int j = 0; j < n; ++j) {
      const int f = j <= n / 2 ? j : j - n;
      const double kx = 2.0 * M_PI * static_cast<double>(f) / L * xs;
      if (2 * j == n)
        S(p, j) = cd(std::cos(kx) / n, 0.0);
      else
        S(p, j) = std::polar(1.0 / n, kx);
    }
  }
  return S;
}

template <class A>
struct Etdrk4Coeffs {
  A E, E2, Q, f1, f2, f3;
};

/// Contour-averaged phi-function weights (the Kassam--Trefethen scheme):
/// each entry's rational expression is evaluated on a unit circle around
/// L*h, which removes the cancellation near z = 0. The full circle is used
/// because dispersive problems have genuinely complex symbols.
template <class A>
Etdrk4Coeffs<A> make_coeffs(const A& Lsym, double h, int M) {
  const A z0 = Lsym * h;
  Etdrk4Coeffs<A> c;
  c.E = z0.exp();
  c.E2 = (0.5 * z0).exp();
  c.Q = A::Zero(z0.rows(), z0.cols());
  c.f1 = c.Q;
  c.f2 = c.Q;
  c.f3 = c.Q;
  for (int r = 0; r < M; ++r) {
    const cd rot = std::polar(1.0, 2.0 * M_PI * (r + 0.5) / M);
    const A z = z0 + rot;
    const A ez = z.exp();
    const A z3 = z * z * z;
    c.Q += ((0.5 * z).exp() - 1.0) / z;
    c.f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
    c.f2 += (2.0 + z + ez * (-2.0 + z)) / z3;
    c.f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
  }
  const double s = h / M;
  c.Q *= s;
  c.f1 *= s;
  c.f2 *= s;
  c.f3 *= s;
  return c;
}

std::vector<long long> snapshot_steps(const std::vector<double>& times, double dt, double t_end) {
  if (times.empty()) throw ConfigError("at least one snapshot time is required");
  std::vector<long long> steps;
  for (double t : times) {
    if (t < -1e-12 || t > t_end * (1.0 + 1e-9) + 1e-12)
      throw ConfigError("snapshot time outside [0, t_end]");
    const long long s = std::llround(t / dt);
    if (std::abs(t - static_cast<double>(s) * dt) > 1e-9 * std::max(1.0, std::abs(t)))
      throw ConfigError("snapshot times must be integer multiples of dt");
    if (!steps.empty() && s <= steps.back())
      throw ConfigError("snapshot times must be strictly increasing");
    steps.push_back(s);
  }
  // The grid format stores uniform axes only.
  for (std::size_t i = 2; i < steps.size(); ++i)
    if (steps[i] - steps[i - 1] != steps[1] - steps[0])
      throw ConfigError("snapshot times must be uniformly spaced");
  return steps;
}

void guard_field(const Eigen::MatrixXd& u, const std::string& name, double t) {
  if (!u.allFinite() || u.cwiseAbs().maxCoeff() > 1e6)
    throw NumericError(name + " reference solve blew up at t=" + std::to_string(t));
}

FieldGrid solve_1d(const ProblemSpec& spec, const SpectralOptions& opt) {
  const int n = opt.n_modes;
  const int m = 3 * n / 2;
  const double lo = spec.bounds[0].first;
  const double L = spec.bounds[0].second - lo;
  const double T = spec.bounds[1].second;
  const std::vector<long long> steps = snapshot_steps(opt.snapshot_times, opt.dt, T);

  const CMat Fn = dft_matrix(n), IFn = idft_matrix(Fn);
  const CMat Fm = dft_matrix(m), IFm = idft_matrix(Fm);
  const CMat P = pad_matrix(n, m), R = trunc_matrix(n, m);
  const Eigen::ArrayXd k2 = wavenumbers(n, L, false).square();
  const Eigen::ArrayXd kd = wavenumbers(n, L, true);

  auto fine = [&](const CVec& v) -> Eigen::ArrayXd { return (IFm * (P * v)).array().real(); };
  auto coarse = [&](const Eigen::ArrayXd& w) -> CVec {
    return R * (Fm * w.matrix().cast<cd>());
  };
  auto c = [&spec](const char* key) { return spec.coeff.at(key); };

  CArr Lsym(n);
  std::function<CVec(const CVec&)> N;
  switch (spec.kind) {
    case ProblemKind::AllenCahn: {
      const double alpha = c("alpha"), delta = c("delta");
      Lsym = (-alpha * k2 + delta).cast<cd>();
      N = [&fine, &coarse, delta](const CVec& v) -> CVec {
        return coarse(-delta * fine(v).cube());
      };
      break;
    }
    case ProblemKind::KdV: {
      const double nu = c("nu");
      Lsym = cd(0.0, 1.0) * nu * kd.cube().cast<cd>();
      N = [&fine, &coarse, &kd](const CVec& v) -> CVec {
        return (cd(0.0, -0.5) * kd.cast<cd>() * coarse(fine(v).square()).array()).matrix();
      };
      break;
    }
    case ProblemKind::KuramotoSivashinsky: {
      const double a1 = c("a1"), a2 = c("a2"), a3 = c("a3");
      Lsym = (a2 * k2 - a3 * k2.square()).cast<cd>();
      N = [&fine, &coarse, &kd, a1](const CVec& v) -> CVec {
        return (cd(0.0, -0.5 * a1) * kd.cast<cd>() * coarse(fine(v).square()).array()).matrix();
      };
      break;
    }
    default:
      throw ConfigError("no 1-D spectral form for problem " + spec.name);
  }

  const Etdrk4Coeffs<CArr> co = make_coeffs(Lsym, opt.dt, opt.contour_points);

  Eigen::VectorXd x(n);
  for (int j = 0; j < n; ++j) x[j] = lo + static_cast<double>(j) * L / n;
  Eigen::VectorXd u0(n);
  for (int j = 0; j < n; ++j) u0[j] = spec.ic(0, std::span<const double>(&x[j], 1));
  CVec v = Fn * u0.cast<cd>();

  CMat S;
  Eigen::VectorXd xo;
  if (opt.out_n > 0) {
    xo = Eigen::VectorXd::LinSpaced(opt.out_n, lo, lo + L);
    S = synth_matrix(n, lo, L, xo);
  }
  auto record = [&](const CVec& spec_v) -> Eigen::VectorXd {
    return opt.out_n > 0 ? (S * spec_v).real().eval() : (IFn * spec_v).real().eval();
  };

  std::vector<Eigen::VectorXd> snaps;
  std::size_t sp = 0;
  auto maybe_record = [&](long long step) {
    while (sp < steps.size() && steps[sp] == step) {
      snaps.push_back(record(v));
      ++sp;
    }
  };
  maybe_record(0);

  for (long long s = 0; s < steps.back(); ++s) {
    const CVec Nv = N(v);
    const CVec a = (co.E2 * v.array() + co.Q * Nv.array()).matrix();
    const CVec Na = N(a);
    const CVec b = (co.E2 * v.array() + co.Q * Na.array()).matrix();
    const CVec Nb = N(b);
    const CVec cc = (co.E2 * a.array() + co.Q * (2.0 * Nb.array() - Nv.array())).matrix();
    const CVec Nc = N(cc);
    v = (co.E * v.array() + co.f1 * Nv.array() + 2.0 * co.f2 * (Na.array() + Nb.array()) +
         co.f3 * Nc.array())
            .matrix();
    guard_field((IFn * v).real(), spec.name, static_cast<double>(s + 1) * opt.dt);
    maybe_record(s + 1);
  }

  const int nx = opt.out_n > 0 ? opt.out_n : n;
  const double x_hi = opt.out_n > 0 ? lo + L : lo + static_cast<double>(n - 1) * L / n;
  const long long nt = static_cast<long long>(snaps.size());
  FieldGrid g;
  g.problem = spec.name;
  g.axes = {{spec.axes[0], nx, lo, x_hi},
            {spec.axes[1], nt, opt.snapshot_times.front(), opt.snapshot_times.back()}};
  Eigen::VectorXd field(static_cast<Eigen::Index>(nx) * nt);
  for (int i = 0; i < nx; ++i)
    for (long long t = 0; t < nt; ++t)
      field[static_cast<Eigen::Index>(i) * nt + t] = snaps[static_cast<std::size_t>(t)][i];
  g.fields.push_back(std::move(field));
  return g;
}

FieldGrid solve_2d(const ProblemSpec& spec, const SpectralOptions& opt) {
  const int n = opt.n_modes;
  const int m = 3 * n / 2;
  const double xlo = spec.bounds[0].first, Lx = spec.bounds[0].second - xlo;
  const double ylo = spec.bounds[1].first, Ly = spec.bounds[1].second - ylo;
  const double T = spec.bounds[2].second;
  const std::vector<long long> steps = snapshot_steps(opt.snapshot_times, opt.dt, T);

  const CMat Fn = dft_matrix(n), IFn = idft_matrix(Fn);
  const CMat Fm = dft_matrix(m), IFm = idft_matrix(Fm);
  const CMat P = pad_matrix(n, m), R = trunc_matrix(n, m);

  const Eigen::ArrayXd kx2 = wavenumbers(n, Lx, false).square();
  const Eigen::ArrayXd ky2 = wavenumbers(n, Ly, false).square();
  Eigen::ArrayXXd K2(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) K2(i, j) = kx2[i] + ky2[j];

  auto c = [&spec](const char* key) { return spec.coeff.at(key); };
  const double e1 = c("eps1"), e2 = c("eps2");
  const double b1 = c("b1"), b2 = c("b2");
  const double c1 = c("c1"), c2 = c("c2");

  using CArr2 = Eigen::ArrayXXcd;
  const CArr2 Lu = (-e1 * K2 - b1).cast<cd>();
  const CArr2 Lv = (-e2 * K2 - b2).cast<cd>();
  const Etdrk4Coeffs<CArr2> cu = make_coeffs(Lu, opt.dt, opt.contour_points);
  const Etdrk4Coeffs<CArr2> cv = make_coeffs(Lv, opt.dt, opt.contour_points);

  auto fine2 = [&](const CMat& V) -> Eigen::ArrayXXd {
    return (IFm * (P * V * P.transpose()) * IFm.transpose()).array().real();
  };
  auto coarse2 = [&](const Eigen::ArrayXXd& W) -> CMat {
    return R * (Fm * W.matrix().cast<cd>() * Fm.transpose()) * R.transpose();
  };
  // Nonlinear parts: N_u = b1 - c1*u*v^2 (the constant lands in mode (0,0)),
  // N_v = c2*u*v^2.
  auto nonlinear = [&](const CMat& Vu, const CMat& Vv, CMat& Nu, CMat& Nv) {
    const Eigen::ArrayXXd wu = fine2(Vu);
    const Eigen::ArrayXXd wv = fine2(Vv);
    const CMat guvv = coarse2(wu * wv * wv);
    Nu = -c1 * guvv;
    Nu(0, 0) += b1 * static_cast<double>(n) * static_cast<double>(n);
    Nv = c2 * guvv;
  };

  Eigen::VectorXd x(n), y(n);
  for (int j = 0; j < n; ++j) {
    x[j] = xlo + static_cast<double>(j) * Lx / n;
    y[j] = ylo + static_cast<double>(j) * Ly / n;
  }
  Eigen::MatrixXd U0(n, n), V0(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double xy[2] = {x[i], y[j]};
      U0(i, j) = spec.ic(0, xy);
      V0(i, j) = spec.ic(1, xy);
    }
  CMat Vu = Fn * U0.cast<cd>() * Fn.transpose();
  CMat Vv = Fn * V0.cast<cd>() * Fn.transpose();

  CMat Sx, Sy;
  if (opt.out_n > 0) {
    Sx = synth_matrix(n, xlo, Lx, Eigen::VectorXd::LinSpaced(opt.out_n, xlo, xlo + Lx));
    Sy = synth_matrix(n, ylo, Ly, Eigen::VectorXd::LinSpaced(opt.out_n, ylo, ylo + Ly));
  }
  auto record = [&](const CMat& V) -> Eigen::MatrixXd {
    return opt.out_n > 0 ? (Sx * V * Sy.transpose()).real().eval()
                         : (IFn * V * IFn.transpose()).real().eval();
  };

  std::vector<Eigen::MatrixXd> snap_u, snap_v;
  std::size_t sp = 0;
  auto maybe_record = [&](long long step) {
    while (sp < steps.size() && steps[sp] == step) {
      snap_u.push_back(record(Vu));
      snap_v.push_back(record(Vv));
      ++sp;
    }
  };
  maybe_record(0);

  CMat Nu0(n, n), Nv0(n, n), Nua(n, n), Nva(n, n), Nub(n, n), Nvb(n, n), Nuc(n, n), Nvc(n, n);
  for (long long s = 0; s < steps.back(); ++s) {
    nonlinear(Vu, Vv, Nu0, Nv0);
    const CMat au = (cu.E2 * Vu.array() + cu.Q * Nu0.array()).matrix();
    const CMat av = (cv.E2 * Vv.array() + cv.Q * Nv0.array()).matrix();
    nonlinear(au, av, Nua, Nva);
    const CMat bu = (cu.E2 * Vu.array() + cu.Q * Nua.array()).matrix();
    const CMat bv = (cv.E2 * Vv.array() + cv.Q * Nva.array()).matrix();
    nonlinear(bu, bv, Nub, Nvb);
    const CMat ccu = (cu.E2 * au.array() + cu.Q * (2.0 * Nub.array() - Nu0.array())).matrix();
    const CMat ccv = (cv.E2 * av.array() + cv.Q * (2.0 * Nvb.array() - Nv0.array())).matrix();
    nonlinear(ccu, ccv, Nuc, Nvc);
    Vu = (cu.E * Vu.array() + cu.f1 * Nu0.array() + 2.0 * cu.f2 * (Nua.array() + Nub.array()) +
          cu.f3 * Nuc.array())
             .matrix();
    Vv = (cv.E * Vv.array() + cv.f1 * Nv0.array() + 2.0 * cv.f2 * (Nva.array() + Nvb.array()) +
          cv.f3 * Nvc.array())
             .matrix();
    const double t = static_cast<double>(s + 1) * opt.dt;
    guard_field((IFn * Vu * IFn.transpose()).real(), spec.name + ".u", t);
    guard_field((IFn * Vv * IFn.transpose()).real(), spec.name + ".v", t);
    maybe_record(s + 1);
  }

  const int no = opt.out_n > 0 ? opt.out_n : n;
  const double xhi = opt.out_n > 0 ? xlo + Lx : xlo + static_cast<double>(n - 1) * Lx / n;
  const double yhi = opt.out_n > 0 ? ylo + Ly : ylo + static_cast<double>(n - 1) * Ly / n;
  const long long nt = static_cast<long long>(snap_u.size());
  FieldGrid g;
  g.problem = spec.name;
  g.axes = {{spec.axes[0], no, xlo, xhi},
            {spec.axes[1], no, ylo, yhi},
            {spec.axes[2], nt, opt.snapshot_times.front(), opt.snapshot_times.back()}};
  Eigen::VectorXd fu(static_cast<Eigen::Index>(no) * no * nt);
  Eigen::VectorXd fv(fu.size());
  for (int i = 0; i < no; ++i)
    for (int j = 0; j < no; ++j)
      for (long long t = 0; t < nt; ++t) {
        const Eigen::Index idx = (static_cast<Eigen::Index>(i) * no + j) * nt + t;
        fu[idx] = snap_u[static_cast<std::size_t>(t)](i, j);
        fv[idx] = snap_v[static_cast<std::size_t>(t)](i, j);
      }
  g.fields.push_back(std::move(fu));
  g.fields.push_back(std::move(fv));
  return g;
}

}  // namespace

FieldGrid etdrk4_solve(const ProblemSpec& spec, const SpectralOptions& opt) {
  if (opt.n_modes < 8 || opt.n_modes % 2 != 0)
    throw ConfigError("n_modes must be even and at least 8");
  if (!(opt.dt > 0.0)) throw ConfigError("dt must be positive");
  if (opt.contour_points < 4) throw ConfigError("contour_points must be at least 4");
  if (opt.out_n < 0 || opt.out_n == 1) throw ConfigError("out_n must be 0 or at least 2");
  if (!spec.time_dependent || spec.bc != BcKind::Periodic)
    throw ConfigError("spectral reference solver needs a periodic unsteady problem");
  switch (spec.kind) {
    case ProblemKind::AllenCahn:
    case ProblemKind::KdV:
    case ProblemKind::KuramotoSivashinsky:
      return solve_1d(spec, opt);
    case ProblemKind::GrayScott:
      return solve_2d(spec, opt);
    default:
      throw ConfigError("no spectral reference solver for problem " + spec.name);
  }
}

ConvergenceLadder etdrk4_ladder(const ProblemSpec& spec, int n_modes, double T, double dt0,
                                int levels) {
  if (levels < 2) throw ConfigError("convergence ladder needs at least two levels");
  const double ratio = T / dt0;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError("T must be an integer multiple of dt0");

  SpectralOptions o;
  o.n_modes = n_modes;
  o.snapshot_times = {T};
  o.dt = dt0 / static_cast<double>(1LL << (levels + 1));
  const Eigen::MatrixXd ref = grid_values(etdrk4_solve(spec, o));
  const double denom = ref.norm();

  ConvergenceLadder lad;
  for (int i = 0; i < levels; ++i) {
    o.dt = dt0 / static_cast<double>(1LL << i);
    const Eigen::MatrixXd gi = grid_values(etdrk4_solve(spec, o));
    lad.dts.push_back(o.dt);
    lad.errors.push_back((gi - ref).norm() / denom);
  }
  double acc = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i + 1 < lad.errors.size(); ++i)
    if (lad.errors[i] > 0.0 && lad.errors[i + 1] > 0.0) {
      acc += std::log2(lad.errors[i] / lad.errors[i + 1]);
      ++pairs;
    }
  lad.order = pairs > 0 ? acc / pairs : 0.0;
  return lad;
}

}  // namespace scpinn
