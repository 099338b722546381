#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "scpinn/jet.hpp"

namespace scpinn {

/// Comparison of jet derivatives against central finite differences.
/// fd[0] and rel_err[0] are unused; order k lives at index k.
struct FdReport {
  int order = 0;
  std::array<double, 5> jet{};
  std::array<double, 5> fd{};
  std::array<double, 5> rel_err{};

  double max_rel_err(int up_to_order) const {
    double m = 0.0;
    for (int k = 1; k <= up_to_order; ++k) m = std::max(m, rel_err[k]);
    return m;
  }
};

/// Checks derivatives 1..order of f at x against second-order central
/// stencils. f is any callable on Jet; its plain value is read off the
/// zeroth coefficient. h_scale stretches the per-order default steps, which
/// are tuned near eps^(1/(k+2)) to balance truncation against roundoff.
///
/// Relative error uses max(|jet|, |fd|, floor) in the denominator so that
/// incidental zero crossings of a derivative do not register as failures.
template <class F>
FdReport fd_check(F&& f, double x, int order, double h_scale = 1.0, double floor = 1.0) {
  auto val = [&](double t) { return f(jet_seed(t, 0)).value(); };

  FdReport rep;
  rep.order = order;
  JetT<double> jx = f(jet_seed(x, order));
  for (int k = 1; k <= order; ++k) rep.jet[k] = jx.c(k);

  const double f0 = val(x);
  const std::array<double, 5> h_default = {0.0, 6e-6, 1.2e-4, 7.4e-4, 2.4e-3};
  for (int k = 1; k <= order; ++k) {
    const double h = h_default[k] * h_scale * (1.0 + std::fabs(x));
    double d = 0.0;
    switch (k) {
      case 1:
        d = (val(x + h) - val(x - h)) / (2.0 * h);
        break;
      case 2:
        d = (val(x + h) - 2.0 * f0 + val(x - h)) / (h * h);
        break;
      case 3:
        d = (val(x + 2 * h) - 2.0 * val(x + h) + 2.0 * val(x - h) - val(x - 2 * h)) /
            (2.0 * h * h * h);
        break;
      case 4:
        d = (val(x + 2 * h) - 4.0 * val(x + h) + 6.0 * f0 - 4.0 * val(x - h) + val(x - 2 * h)) /
            (h * h * h * h);
        break;
    }
    rep.fd[k] = d;
    const double denom = std::max({std::fabs(rep.jet[k]), std::fabs(d), floor});
    rep.rel_err[k] = std::fabs(rep.jet[k] - d) / denom;
  }
  return rep;
}

/// Directional derivative of a scalar function of many parameters against a
/// central difference: g . dir vs (f(w + h dir) - f(w - h dir)) / 2h.
/// Returns the relative discrepancy with the same flooring rule as above.
inline double directional_fd_rel_err(const std::function<double(const double*)>& f,
                                     const double* w, const double* grad, const double* dir,
                                     int n, double h, double floor = 1.0) {
  double dot = 0.0, scale = 0.0;
  for (int i = 0; i < n; ++i) {
    dot += grad[i] * dir[i];
    scale += dir[i] * dir[i];
  }
  (void)scale;
  std::vector<double> wp(w, w + n), wm(w, w + n);
  for (int i = 0; i < n; ++i) {
    wp[i] += h * dir[i];
    wm[i] -= h * dir[i];
  }
  const double fd = (f(wp.data()) - f(wm.data())) / (2.0 * h);
  return std::fabs(dot - fd) / std::max({std::fabs(dot), std::fabs(fd), floor});
}

}  // namespace scpinn
