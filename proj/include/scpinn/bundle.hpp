#pragma once

#include <vector>

namespace scpinn {

/// Which derivatives a forward pass must produce: the maximum order per
/// input axis, indexed like NetworkConfig::inputs. Zero means the value
/// along that axis suffices. Mixed partials never appear in the residuals
/// handled here, so per-axis univariate jets cover every requirement.
struct DerivReq {
  std::vector<int> axis_order;

  int max_order() const {
    int m = 0;
    for (int o : axis_order) m = m > o ? m : o;
    return m;
  }
};

/// Outputs of one differentiated forward pass at a point (or, for batched
/// scalars, at a whole batch): network values plus the requested pure
/// derivatives, all physical-scale (input normalization already folded in).
template <class S>
struct DerivBundle {
  /// Input coordinates lifted to S; constants with respect to parameters.
  /// Residuals with explicit source terms read these.
  std::vector<S> coord;

  /// Value per network output.
  std::vector<S> value;

  /// d[out][axis][order-1] = d^order(output)/d(axis)^order.
  std::vector<std::vector<std::vector<S>>> d;

  const S& deriv(int out, int axis, int order) const { return d[out][axis][order - 1]; }
};

}  // namespace scpinn
