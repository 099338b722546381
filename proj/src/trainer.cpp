#include "scpinn/trainer.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "scpinn/errors.hpp"
#include "scpinn/rng.hpp"

namespace scpinn {

double lr_at(const TrainConfig& cfg, long long k) {
  const long long N = cfg.iterations;
  const long long W = static_cast<long long>(std::floor(cfg.warmup_fraction * static_cast<double>(N)));
  if (k < W) return cfg.lr * static_cast<double>(k + 1) / static_cast<double>(W);
  // Cosine decay parameterized so the final step lands exactly on lr_min.
  const long long span = N - 1 - W;
  if (span <= 0) return cfg.lr;
  const double s = static_cast<double>(k - W) / static_cast<double>(span);
  return cfg.lr_min + 0.5 * (cfg.lr - cfg.lr_min) * (1.0 + std::cos(M_PI * s));
}

MetricsRow evaluate(const ProblemSpec& spec, const Network& net, const NetBatch& engine,
                    const Eigen::VectorXd& params, const EvalTarget& target) {
  const Eigen::Index n = target.points.rows();
  const Eigen::Index n_scored = target.values.cols();
  if (n == 0 || target.points.cols() != spec.dim())
    throw ConfigError("evaluation points do not match the problem dimension");
  if (target.values.rows() != n || n_scored == 0 || n_scored > net.n_outputs())
    throw ConfigError("evaluation values do not match points and outputs");

  // Grids can be large; score in slices so the stacked layer buffers stay
  // modest.
  constexpr Eigen::Index kChunk = 16384;
  MetricsRow row;
  NetBatch::Workspace ws;
  DerivReq vreq;
  vreq.axis_order.assign(static_cast<std::size_t>(spec.dim()), 0);
  Eigen::VectorXd ssd = Eigen::VectorXd::Zero(n_scored);
  Eigen::VectorXd ssr = Eigen::VectorXd::Zero(n_scored);
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index m = std::min(kChunk, n - start);
    NetBatch::Outputs out =
        engine.forward(params, target.points.middleRows(start, m), vreq, ws, false);
    for (Eigen::Index o = 0; o < n_scored; ++o) {
      Eigen::ArrayXd ref = target.values.col(o).segment(start, m).array();
      Eigen::ArrayXd diff = out.val[static_cast<std::size_t>(o)][0] - ref;
      ssd[o] += diff.square().sum();
      ssr[o] += ref.square().sum();
    }
  }
  for (Eigen::Index o = 0; o < n_scored; ++o) {
    row.mse.push_back(ssd[o] / static_cast<double>(n));
    row.rel_l2.push_back(std::sqrt(ssd[o]) / std::sqrt(std::max(ssr[o], 1e-300)));
  }

  if (target.div_points.rows() > 0 && net.n_outputs() >= 2 && spec.dim() >= 2) {
    DerivReq dreq;
    dreq.axis_order.assign(static_cast<std::size_t>(spec.dim()), 1);
    NetBatch::Workspace dws;
    double ss = 0.0;
    const Eigen::Index nd = target.div_points.rows();
    for (Eigen::Index start = 0; start < nd; start += kChunk) {
      const Eigen::Index m = std::min(kChunk, nd - start);
      NetBatch::Outputs d =
          engine.forward(params, target.div_points.middleRows(start, m), dreq, dws, false);
      Eigen::ArrayXd div = d.val[0][static_cast<std::size_t>(d.plan.index(0, 1))] +
                           d.val[1][static_cast<std::size_t>(d.plan.index(1, 1))];
      ss += div.square().sum();
    }
    row.has_div = true;
    row.div_mse = ss / static_cast<double>(nd);
  }
  return row;
}

TrainResult train(const ProblemSpec& spec, const Network& net, const TrainConfig& cfg,
                  const EvalTarget* target,
                  const std::function<void(const MetricsRow&)>& on_metrics,
                  const Eigen::VectorXd* initial_params) {
  if (cfg.iterations < 0) throw ConfigError("iterations must be nonnegative");
  if (cfg.batch_interior <= 0) throw ConfigError("interior batch size must be positive");
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be positive");

  NetBatch engine(net);
  TrainResult R;
  R.params = initial_params ? *initial_params : net.init_params(cfg.seed);
  if (R.params.size() != net.n_params())
    throw ConfigError("initial parameter vector has the wrong size");

  // The correction linearizes about the previous iterate; before the first
  // step that iterate is the initialization itself.
  Eigen::VectorXd snapshot = R.params;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(net.n_params());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(net.n_params());
  LossBuffers buffers;
  const Rng root(cfg.seed);
  const auto t0 = std::chrono::steady_clock::now();

  const long long N = cfg.iterations;
  for (long long k = 0; k < N; ++k) {
    Rng brng = root.stream("batch", static_cast<std::uint64_t>(k));
    Batch batch = sample_batch(spec, brng, cfg.batch_interior, cfg.resolved_bc(),
                               cfg.resolved_ic());
    LossResult L =
        cfg.correction.enabled
            ? assemble_scale_loss(spec, net, engine, R.params, snapshot, batch, cfg.weights,
                                  cfg.correction, true, buffers)
            : assemble_baseline_loss(spec, net, engine, R.params, batch, cfg.weights, true,
                                     buffers);

    if (!std::isfinite(L.report.total) || !L.grad.allFinite()) {
      R.aborted = true;
      R.abort_iter = k;
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "nonfinite loss or gradient at step %lld "
                    "(total=%g pde=%g ic=%g bc=%g)",
                    k, L.report.total, L.report.pde_total, L.report.ic, L.report.bc);
      R.abort_reason = buf;
      break;
    }

    snapshot = R.params;
    const double lr = lr_at(cfg, k);
    const double t = static_cast<double>(k + 1);
    m = cfg.adam.beta1 * m + (1.0 - cfg.adam.beta1) * L.grad;
    v.array() = cfg.adam.beta2 * v.array() +
                (1.0 - cfg.adam.beta2) * L.grad.array().square();
    const double bc1 = 1.0 - std::pow(cfg.adam.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam.beta2, t);
    R.params.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam.eps);

    const long long done = k + 1;
    if ((cfg.eval_every > 0 && done % cfg.eval_every == 0) || done == N) {
      MetricsRow row = target ? evaluate(spec, net, engine, R.params, *target) : MetricsRow{};
      row.iter = done;
      row.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      row.loss_total = L.report.total;
      row.loss_pde = L.report.pde_total;
      row.loss_ic = L.report.ic;
      row.loss_bc = L.report.bc;
      R.metrics.push_back(row);
      if (on_metrics) on_metrics(R.metrics.back());
    }
  }
  return R;
}

namespace {

std::string fmt_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string fmt_int(long long x) {
  char buf[24];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       const std::vector<std::string>& output_names) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IntegrityError("cannot open metrics file for writing: " + path);
  f << "iter,wall_time_s,loss_total,loss_pde,loss_ic,loss_bc";
  const bool scored = !rows.empty() && !rows.front().rel_l2.empty();
  const bool has_div = !rows.empty() && rows.front().has_div;
  if (scored) {
    for (const auto& n : output_names) f << ",rel_l2_" << n;
    for (const auto& n : output_names) f << ",mse_" << n;
  }
  if (has_div) f << ",div_mse";
  f << "\n";
  for (const MetricsRow& r : rows) {
    f << fmt_int(r.iter) << ',' << fmt_double(r.wall_time_s) << ','
      << fmt_double(r.loss_total) << ',' << fmt_double(r.loss_pde) << ','
      << fmt_double(r.loss_ic) << ',' << fmt_double(r.loss_bc);
    if (scored) {
      for (double x : r.rel_l2) f << ',' << fmt_double(x);
      for (double x : r.mse) f << ',' << fmt_double(x);
    }
    if (has_div) f << ',' << fmt_double(r.div_mse);
    f << "\n";
  }
  if (!f) throw IntegrityError("failed while writing metrics file: " + path);
}

}  // namespace scpinn
