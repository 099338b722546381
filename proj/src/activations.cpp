#include "scpinn/activations.hpp"

#include <cassert>
#include <cmath>

#include "scpinn/errors.hpp"

namespace scpinn {
namespace {

// Derivatives of the sigmoid are polynomials in s = sigma(x); all share the
// factor s(1-s). Coefficients follow from repeated differentiation of
// s' = s(1-s).
void sigmoid_derivs(int m, double s, double* out) {
  out[0] = s;
  if (m < 1) return;
  const double p = s * (1.0 - s);
  out[1] = p;
  if (m >= 2) out[2] = p * (1.0 - 2.0 * s);
  if (m >= 3) out[3] = p * (1.0 + s * (-6.0 + 6.0 * s));
  if (m >= 4) out[4] = p * (1.0 + s * (-14.0 + s * (36.0 - 24.0 * s)));
  if (m >= 5) out[5] = p * (1.0 + s * (-30.0 + s * (150.0 + s * (-240.0 + 120.0 * s))));
  if (m >= 6) throw NumericError("activation derivative order > 5 not supported");
}

double softplus_value(double x) {
  // log(1+e^x) without overflow for large |x|.
  return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

}  // namespace

Act act_from_name(std::string_view name) {
  if (name == "sin") return Act::Sin;
  if (name == "silu") return Act::Silu;
  if (name == "softplus") return Act::Softplus;
  throw ConfigError("unknown activation: " + std::string(name));
}

std::string act_name(Act a) {
  switch (a) {
    case Act::Sin: return "sin";
    case Act::Silu: return "silu";
    case Act::Softplus: return "softplus";
  }
  return "?";
}

void act_derivs(Act a, int m, double x, double* psi) {
  assert(m >= 0 && m <= 5);
  switch (a) {
    case Act::Sin: {
      const double sn = std::sin(x), cs = std::cos(x);
      const double cycle[4] = {sn, cs, -sn, -cs};
      for (int k = 0; k <= m; ++k) psi[k] = cycle[k & 3];
      return;
    }
    case Act::Silu: {
      // silu = x * sigma, so by the product rule
      // silu^(n) = x * sigma^(n) + n * sigma^(n-1).
      double sg[7];
      sigmoid_derivs(m, sigmoid(x), sg);
      psi[0] = x * sg[0];
      for (int k = 1; k <= m; ++k) psi[k] = x * sg[k] + k * sg[k - 1];
      return;
    }
    case Act::Softplus: {
      // softplus' = sigma, so higher derivatives shift the sigmoid table.
      double sg[7];
      if (m >= 1) sigmoid_derivs(m - 1, sigmoid(x), sg);
      psi[0] = softplus_value(x);
      for (int k = 1; k <= m; ++k) psi[k] = sg[k - 1];
      return;
    }
  }
}

double act_deriv(Act a, int n, double x) {
  double psi[6];
  act_derivs(a, n, x, psi);
  return psi[n];
}

void act_derivs(Act a, int m, const Eigen::ArrayXXd& z, Eigen::ArrayXXd* psi) {
  assert(m >= 0 && m <= 5);
  switch (a) {
    case Act::Sin: {
      Eigen::ArrayXXd sn = z.sin();
      Eigen::ArrayXXd cs = z.cos();
      for (int k = 0; k <= m; ++k) {
        switch (k & 3) {
          case 0: psi[k] = sn; break;
          case 1: psi[k] = cs; break;
          case 2: psi[k] = -sn; break;
          case 3: psi[k] = -cs; break;
        }
      }
      return;
    }
    case Act::Silu: {
      Eigen::ArrayXXd s =
          (z >= 0.0).select(1.0 / (1.0 + (-z).exp()), z.exp() / (1.0 + z.exp()));
      Eigen::ArrayXXd p = s * (1.0 - s);
      // sigma^(k) tables, reused across the silu product rule below.
      Eigen::ArrayXXd sg[6];
      sg[0] = s;
      if (m >= 1) sg[1] = p;
      if (m >= 2) sg[2] = p * (1.0 - 2.0 * s);
      if (m >= 3) sg[3] = p * (1.0 + s * (-6.0 + 6.0 * s));
      if (m >= 4) sg[4] = p * (1.0 + s * (-14.0 + s * (36.0 - 24.0 * s)));
      if (m >= 5) sg[5] = p * (1.0 + s * (-30.0 + s * (150.0 + s * (-240.0 + 120.0 * s))));
      psi[0] = z * sg[0];
      for (int k = 1; k <= m; ++k) psi[k] = z * sg[k] + static_cast<double>(k) * sg[k - 1];
      return;
    }
    case Act::Softplus: {
      Eigen::ArrayXXd s =
          (z >= 0.0).select(1.0 / (1.0 + (-z).exp()), z.exp() / (1.0 + z.exp()));
      psi[0] = z.max(0.0) + (-z.abs()).exp().log1p();
      if (m >= 1) psi[1] = s;
      if (m >= 2) {
        Eigen::ArrayXXd p = s * (1.0 - s);
        psi[2] = p;
        if (m >= 3) psi[3] = p * (1.0 - 2.0 * s);
        if (m >= 4) psi[4] = p * (1.0 + s * (-6.0 + 6.0 * s));
        if (m >= 5) psi[5] = p * (1.0 + s * (-14.0 + s * (36.0 - 24.0 * s)));
      }
      return;
    }
  }
}

}  // namespace scpinn
