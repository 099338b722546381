#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scpinn/netbatch.hpp"
#include "scpinn/network.hpp"
#include "scpinn/problems.hpp"
#include "scpinn/scale_loss.hpp"

namespace scpinn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct TrainConfig {
  long long iterations = 0;
  int batch_interior = 1000;
  int batch_bc = -1;  // -1 derives a quarter of the interior count
  int batch_ic = -1;
  double lr = 1e-3;
  double lr_min = 1e-10;
  double warmup_fraction = 0.02;
  AdamConfig adam;
  LossWeights weights;
  CorrectionConfig correction;
  std::uint64_t seed = 0;
  long long eval_every = 1000;

  int resolved_bc() const { return batch_bc >= 0 ? batch_bc : std::max(1, batch_interior / 4); }
  int resolved_ic() const { return batch_ic >= 0 ? batch_ic : std::max(1, batch_interior / 4); }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Learning rate at optimizer step k (0-based): linear ramp over the warmup
/// window, then cosine decay from lr down to lr_min at the final step.
double lr_at(const TrainConfig& cfg, long long k);

/// Reference data the trainer scores against between optimizer steps.
/// div_points is optional (empty matrix) and triggers a divergence-MSE
/// column for two-component velocity fields.
struct EvalTarget {
  Eigen::MatrixXd points;      // one evaluation point per row
  Eigen::MatrixXd values;      // points.rows() x n_outputs reference values
  Eigen::MatrixXd div_points;  // rows may be zero
};

struct MetricsRow {
  long long iter = 0;
  double wall_time_s = 0.0;
  double loss_total = 0.0;
  double loss_pde = 0.0;
  double loss_ic = 0.0;
  double loss_bc = 0.0;
  std::vector<double> rel_l2;  // per output, present only when a target was scored
  std::vector<double> mse;     // per output
  bool has_div = false;
  double div_mse = 0.0;
};

struct TrainResult {
  Eigen::VectorXd params;
  std::vector<MetricsRow> metrics;
  bool aborted = false;
  long long abort_iter = -1;   // optimizer step at which the loss went nonfinite
  std::string abort_reason;
};

MetricsRow evaluate(const ProblemSpec& spec, const Network& net, const NetBatch& engine,
                    const Eigen::VectorXd& params, const EvalTarget& target);

/// Runs the full optimization loop. Batches are redrawn every step from a
/// per-step RNG stream, so two runs with the same config and seed produce
/// identical parameter trajectories. A nonfinite loss or gradient stops the
/// run with aborted set and all metrics rows gathered so far kept.
TrainResult train(const ProblemSpec& spec, const Network& net, const TrainConfig& cfg,
                  const EvalTarget* target = nullptr,
                  const std::function<void(const MetricsRow&)>& on_metrics = nullptr,
                  const Eigen::VectorXd* initial_params = nullptr);

/// Shortest-round-trip decimal formatting, one row per metrics entry.
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       const std::vector<std::string>& output_names);

}  // namespace scpinn
