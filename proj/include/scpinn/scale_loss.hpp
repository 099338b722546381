#pragma once

#include <Eigen/Core>
#include <vector>

#include "scpinn/batch_tape.hpp"
#include "scpinn/netbatch.hpp"
#include "scpinn/network.hpp"
#include "scpinn/problems.hpp"

namespace scpinn {

/// Correction strength: the interior residual is augmented by
///   S = (1/tau_sc) F - (gamma/tau_alpha) lap(F),   F = f(w) - f(w_prev),
/// evaluated against a frozen snapshot of the previous parameters. Disabled
/// means the plain physics-informed loss; the augmented loss reduces to it
/// exactly when the correction weight is removed.
struct CorrectionConfig {
  bool enabled = true;
  double tau_sc = 0.1;
  double tau_alpha = 1.0;

  friend bool operator==(const CorrectionConfig&, const CorrectionConfig&) = default;
};

/// Smoothing radius of the implied Helmholtz filter (I - a^2 lap):
/// a^2 = tau_sc * gamma / tau_alpha.
inline double smoothing_alpha_sq(const CorrectionConfig& c, double gamma) {
  return c.tau_sc * gamma / c.tau_alpha;
}

struct LossWeights {
  double ic = 1.0;
  double bc = 1.0;

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossReport {
  double total = 0.0;
  double pde_total = 0.0;         // sum over equations of the mean squares
  double ic = 0.0;                // unweighted mean square
  double bc = 0.0;                // unweighted mean square, pooled over faces/outputs
  std::vector<double> pde;        // per equation
  std::vector<double> corr_diag;  // mean square of the correction term alone
};

struct LossResult {
  LossReport report;
  Eigen::VectorXd grad;  // size 0 when gradients were not requested
};

/// Engine workspaces reused across iterations; contents are scratch.
struct LossBuffers {
  NetBatch::Workspace interior, snapshot, ic;
  std::vector<NetBatch::Workspace> bc;
};

/// Full correction-augmented loss at `params` with the snapshot bundle
/// evaluated at `snapshot_params` (constants: no gradient flows into them).
LossResult assemble_scale_loss(const ProblemSpec& spec, const Network& net,
                               const NetBatch& engine, const Eigen::VectorXd& params,
                               const Eigen::VectorXd& snapshot_params, const Batch& batch,
                               const LossWeights& weights, const CorrectionConfig& corr,
                               bool want_grad, LossBuffers& buffers);

/// Plain physics-informed loss; bit-identical to assemble_scale_loss with
/// the correction disabled.
LossResult assemble_baseline_loss(const ProblemSpec& spec, const Network& net,
                                  const NetBatch& engine, const Eigen::VectorXd& params,
                                  const Batch& batch, const LossWeights& weights, bool want_grad,
                                  LossBuffers& buffers);

/// Same quantity computed point by point over the scalar jet/tape path.
/// Slow; exists so the batched assembly has an independently auditable
/// implementation to agree with.
LossResult assemble_scale_loss_reference(const ProblemSpec& spec, const Network& net,
                                         const Eigen::VectorXd& params,
                                         const Eigen::VectorXd& snapshot_params,
                                         const Batch& batch, const LossWeights& weights,
                                         const CorrectionConfig& corr, bool want_grad);

}  // namespace scpinn
