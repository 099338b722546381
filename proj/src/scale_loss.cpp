#include "scpinn/scale_loss.hpp"

#include <cassert>

#include "scpinn/tape.hpp"

namespace scpinn {
namespace {

/// Tape handles for every engine output stream, so adjoints can be routed
/// back to the engine after the tape sweep.
struct LeafSet {
  StreamPlan plan;
  std::vector<std::vector<BVar>> leaf;  // [output][stream]
};

DerivBundle<BVar> make_bundle(BatchTape& T, const NetBatch::Outputs& out, const DerivReq& req,
                              bool constants, LeafSet* leaves) {
  const int no = static_cast<int>(out.val.size());
  const int d = static_cast<int>(req.axis_order.size());
  DerivBundle<BVar> b;
  b.value.resize(static_cast<std::size_t>(no));
  b.d.assign(static_cast<std::size_t>(no),
             std::vector<std::vector<BVar>>(static_cast<std::size_t>(d)));
  if (leaves) {
    leaves->plan = out.plan;
    leaves->leaf.assign(static_cast<std::size_t>(no),
                        std::vector<BVar>(static_cast<std::size_t>(out.plan.count())));
  }
  auto lift = [&](int o, int s) {
    BVar v = constants ? T.constant(out.val[static_cast<std::size_t>(o)][static_cast<std::size_t>(s)])
                       : T.leaf(out.val[static_cast<std::size_t>(o)][static_cast<std::size_t>(s)]);
    if (leaves) leaves->leaf[static_cast<std::size_t>(o)][static_cast<std::size_t>(s)] = v;
    return v;
  };
  for (int o = 0; o < no; ++o) {
    b.value[static_cast<std::size_t>(o)] = lift(o, 0);
    for (int a = 0; a < d; ++a) {
      const int m = req.axis_order[static_cast<std::size_t>(a)];
      auto& dst = b.d[static_cast<std::size_t>(o)][static_cast<std::size_t>(a)];
      dst.resize(static_cast<std::size_t>(m));
      for (int k = 1; k <= m; ++k)
        dst[static_cast<std::size_t>(k - 1)] = lift(o, out.plan.index(a, k));
    }
  }
  return b;
}

std::vector<std::vector<Eigen::ArrayXd>> collect_adjoints(const BatchTape& T, const LeafSet& ls) {
  std::vector<std::vector<Eigen::ArrayXd>> adj(ls.leaf.size());
  for (std::size_t o = 0; o < ls.leaf.size(); ++o) {
    adj[o].resize(ls.leaf[o].size());
    for (std::size_t s = 0; s < ls.leaf[o].size(); ++s)
      if (T.has_adjoint(ls.leaf[o][s])) adj[o][s] = T.adjoint(ls.leaf[o][s]);
  }
  return adj;
}

/// Pooled mean of squares across groups of unequal sizes: the mean over the
/// concatenation, built as a count-weighted combination of group means.
class MeanSqPool {
 public:
  explicit MeanSqPool(BatchTape& T) : T_(&T) {}
  void add(BVar residuals) {
    BVar ms = T_->mean(residuals * residuals);
    const double m = static_cast<double>(T_->value(residuals).size());
    BVar contrib = m * ms;
    sum_ = count_ > 0 ? sum_ + contrib : contrib;
    count_ += m;
  }
  bool empty() const { return count_ == 0.0; }
  BVar finish() const { return (1.0 / count_) * sum_; }

 private:
  BatchTape* T_;
  BVar sum_{};
  double count_ = 0.0;
};

LossResult assemble_impl(const ProblemSpec& spec, const Network& net, const NetBatch& engine,
                         const Eigen::VectorXd& params, const Eigen::VectorXd* snapshot_params,
                         const Batch& batch, const LossWeights& weights,
                         const CorrectionConfig& corr, bool want_grad, LossBuffers& buffers) {
  BatchTape T;
  const DerivReq rreq = spec.residual_req();

  LeafSet int_leaves;
  NetBatch::Outputs outs =
      engine.forward(params, batch.interior, rreq, buffers.interior, want_grad);
  DerivBundle<BVar> cur = make_bundle(T, outs, rreq, /*constants=*/false, &int_leaves);

  Eigen::MatrixXd src = residual_source(spec, batch.interior);
  std::vector<BVar> src_lift;
  for (Eigen::Index c = 0; c < src.cols(); ++c)
    src_lift.push_back(T.constant(src.col(c).array()));

  std::vector<BVar> res =
      pde_residual<BVar>(spec, cur, src_lift.empty() ? nullptr : &src_lift);

  std::vector<BVar> corr_terms;
  if (corr.enabled) {
    // The snapshot pass runs under the interior request, not the smaller
    // snapshot one: identical stacked shapes make the two passes bitwise
    // comparable, so F is exactly zero when the snapshot equals the
    // parameters.
    NetBatch::Outputs souts =
        engine.forward(*snapshot_params, batch.interior, rreq, buffers.snapshot, false);
    DerivBundle<BVar> snap = make_bundle(T, souts, rreq, /*constants=*/true, nullptr);
    corr_terms = correction_term<BVar>(spec, cur, snap, corr.tau_sc, corr.tau_alpha);
    for (std::size_t e = 0; e < res.size(); ++e) res[e] = res[e] + corr_terms[e];
  }

  LossResult out;
  out.report.pde.resize(res.size());
  out.report.corr_diag.assign(res.size(), 0.0);

  BVar pde_total{};
  for (std::size_t e = 0; e < res.size(); ++e) {
    BVar ms = T.mean(res[e] * res[e]);
    out.report.pde[e] = T.scalar(ms);
    pde_total = e > 0 ? pde_total + ms : ms;
  }
  BVar total = pde_total;

  // Boundary terms. Every residual entry (value or slope mismatch, per
  // output) enters one pooled mean so face counts never reweight each other.
  MeanSqPool bc_pool(T);
  std::vector<LeafSet> bc_leaves;
  int bc_fwd = 0;
  auto next_bc_ws = [&buffers, &bc_fwd]() -> NetBatch::Workspace& {
    if (buffers.bc.size() <= static_cast<std::size_t>(bc_fwd))
      buffers.bc.resize(static_cast<std::size_t>(bc_fwd) + 1);
    return buffers.bc[static_cast<std::size_t>(bc_fwd++)];
  };

  for (const PeriodicPairs& pp : batch.periodic) {
    DerivReq breq;
    breq.axis_order.assign(static_cast<std::size_t>(spec.dim()), 0);
    breq.axis_order[static_cast<std::size_t>(pp.axis)] = 1;
    LeafSet lo_l, hi_l;
    NetBatch::Outputs lo = engine.forward(params, pp.lo, breq, next_bc_ws(), want_grad);
    DerivBundle<BVar> blo = make_bundle(T, lo, breq, false, &lo_l);
    NetBatch::Outputs hi = engine.forward(params, pp.hi, breq, next_bc_ws(), want_grad);
    DerivBundle<BVar> bhi = make_bundle(T, hi, breq, false, &hi_l);
    for (int o = 0; o < net.n_outputs(); ++o) {
      bc_pool.add(blo.value[static_cast<std::size_t>(o)] - bhi.value[static_cast<std::size_t>(o)]);
      bc_pool.add(blo.deriv(o, pp.axis, 1) - bhi.deriv(o, pp.axis, 1));
    }
    bc_leaves.push_back(std::move(lo_l));
    bc_leaves.push_back(std::move(hi_l));
  }
  if (batch.bc_points.rows() > 0) {
    DerivReq breq;
    breq.axis_order.assign(static_cast<std::size_t>(spec.dim()), 0);
    LeafSet bl;
    NetBatch::Outputs bo = engine.forward(params, batch.bc_points, breq, next_bc_ws(), want_grad);
    DerivBundle<BVar> bb = make_bundle(T, bo, breq, false, &bl);
    for (std::size_t c = 0; c < batch.bc_outputs.size(); ++c) {
      const int o = batch.bc_outputs[c];
      bc_pool.add(bb.value[static_cast<std::size_t>(o)] -
                  T.constant(batch.bc_values.col(static_cast<Eigen::Index>(c)).array()));
    }
    bc_leaves.push_back(std::move(bl));
  }
  if (!bc_pool.empty()) {
    BVar bc_node = bc_pool.finish();
    out.report.bc = T.scalar(bc_node);
    total = total + weights.bc * bc_node;
  }

  // Initial-condition term.
  LeafSet ic_leaves;
  bool have_ic = batch.ic_points.rows() > 0;
  if (have_ic) {
    DerivReq ireq;
    ireq.axis_order.assign(static_cast<std::size_t>(spec.dim()), 0);
    NetBatch::Outputs io = engine.forward(params, batch.ic_points, ireq, buffers.ic, want_grad);
    DerivBundle<BVar> ib = make_bundle(T, io, ireq, false, &ic_leaves);
    MeanSqPool ic_pool(T);
    for (int o = 0; o < net.n_outputs(); ++o)
      ic_pool.add(ib.value[static_cast<std::size_t>(o)] -
                  T.constant(batch.ic_values.col(o).array()));
    BVar ic_node = ic_pool.finish();
    out.report.ic = T.scalar(ic_node);
    total = total + weights.ic * ic_node;
  }

  out.report.pde_total = T.scalar(pde_total);
  out.report.total = T.scalar(total);

  // Correction diagnostics sit outside the loss graph's root path.
  for (std::size_t e = 0; e < corr_terms.size(); ++e)
    out.report.corr_diag[e] = T.scalar(T.mean(corr_terms[e] * corr_terms[e]));

  if (want_grad) {
    T.backward(total);
    out.grad = Eigen::VectorXd::Zero(net.n_params());
    engine.backward(params, buffers.interior, collect_adjoints(T, int_leaves), out.grad);
    for (std::size_t i = 0; i < bc_leaves.size(); ++i)
      engine.backward(params, buffers.bc[i], collect_adjoints(T, bc_leaves[i]), out.grad);
    if (have_ic) engine.backward(params, buffers.ic, collect_adjoints(T, ic_leaves), out.grad);
  }
  return out;
}

}  // namespace

LossResult assemble_scale_loss(const ProblemSpec& spec, const Network& net,
                               const NetBatch& engine, const Eigen::VectorXd& params,
                               const Eigen::VectorXd& snapshot_params, const Batch& batch,
                               const LossWeights& weights, const CorrectionConfig& corr,
                               bool want_grad, LossBuffers& buffers) {
  return assemble_impl(spec, net, engine, params, corr.enabled ? &snapshot_params : nullptr,
                       batch, weights, corr, want_grad, buffers);
}

LossResult assemble_baseline_loss(const ProblemSpec& spec, const Network& net,
                                  const NetBatch& engine, const Eigen::VectorXd& params,
                                  const Batch& batch, const LossWeights& weights, bool want_grad,
                                  LossBuffers& buffers) {
  CorrectionConfig off;
  off.enabled = false;
  return assemble_impl(spec, net, engine, params, nullptr, batch, weights, off, want_grad,
                       buffers);
}

// ---------------------------------------------------------------------------
// Scalar-tape reference implementation.

LossResult assemble_scale_loss_reference(const ProblemSpec& spec, const Network& net,
                                         const Eigen::VectorXd& params,
                                         const Eigen::VectorXd& snapshot_params,
                                         const Batch& batch, const LossWeights& weights,
                                         const CorrectionConfig& corr, bool want_grad) {
  Tape T;
  std::vector<Var> pv;
  pv.reserve(static_cast<std::size_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i)
    pv.push_back(T.param(params[i], static_cast<int>(i)));
  const std::span<const Var> pspan(pv.data(), pv.size());
  auto lift = [&T](double v) { return T.constant(v); };
  auto ident = [](double v) { return v; };
  const std::span<const double> snap_span(snapshot_params.data(),
                                          static_cast<std::size_t>(snapshot_params.size()));

  const DerivReq rreq = spec.residual_req();
  const DerivReq sreq = spec.snapshot_req();
  const Eigen::Index n = batch.interior.rows();
  const Eigen::MatrixXd src = residual_source(spec, batch.interior);

  LossResult out;
  out.report.pde.assign(static_cast<std::size_t>(spec.n_equations), 0.0);
  out.report.corr_diag.assign(static_cast<std::size_t>(spec.n_equations), 0.0);

  std::vector<Var> eq_sums(static_cast<std::size_t>(spec.n_equations));
  std::vector<double> corr_sums(static_cast<std::size_t>(spec.n_equations), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> x(batch.interior.row(i).begin(), batch.interior.row(i).end());
    DerivBundle<Var> cur = net.forward_bundle<Var>(pspan, x, rreq, lift);
    std::vector<Var> src_lift;
    for (Eigen::Index c = 0; c < src.cols(); ++c) src_lift.push_back(T.constant(src(i, c)));
    std::vector<Var> res =
        pde_residual<Var>(spec, cur, src_lift.empty() ? nullptr : &src_lift);
    if (corr.enabled) {
      DerivBundle<double> sd = net.forward_bundle<double>(snap_span, x, sreq, ident);
      DerivBundle<Var> snap;
      snap.value.resize(sd.value.size());
      snap.d.resize(sd.d.size());
      for (std::size_t o = 0; o < sd.value.size(); ++o) {
        snap.value[o] = T.constant(sd.value[o]);
        snap.d[o].resize(sd.d[o].size());
        for (std::size_t a = 0; a < sd.d[o].size(); ++a)
          for (double v : sd.d[o][a]) snap.d[o][a].push_back(T.constant(v));
      }
      std::vector<Var> ct = correction_term<Var>(spec, cur, snap, corr.tau_sc, corr.tau_alpha);
      for (std::size_t e = 0; e < res.size(); ++e) {
        corr_sums[e] += T.value(ct[e]) * T.value(ct[e]);
        res[e] = res[e] + ct[e];
      }
    }
    for (std::size_t e = 0; e < res.size(); ++e) {
      Var sq = res[e] * res[e];
      eq_sums[e] = (i == 0) ? sq : eq_sums[e] + sq;
    }
  }

  Var total{};
  bool have_total = false;
  for (std::size_t e = 0; e < eq_sums.size(); ++e) {
    Var ms = (1.0 / static_cast<double>(n)) * eq_sums[e];
    out.report.pde[e] = T.value(ms);
    out.report.pde_total += T.value(ms);
    out.report.corr_diag[e] = corr_sums[e] / static_cast<double>(n);
    total = have_total ? total + ms : ms;
    have_total = true;
  }

  // Boundary terms, pooled exactly like the batched path.
  Var bc_sum{};
  double bc_count = 0.0;
  auto pool_bc = [&](Var sq_sum, double m) {
    // sq_sum is already a sum of squares over m entries
    bc_sum = bc_count > 0.0 ? bc_sum + sq_sum : sq_sum;
    bc_count += m;
  };
  DerivReq vreq;
  vreq.axis_order.assign(static_cast<std::size_t>(spec.dim()), 0);

  for (const PeriodicPairs& pp : batch.periodic) {
    DerivReq breq = vreq;
    breq.axis_order[static_cast<std::size_t>(pp.axis)] = 1;
    for (int o = 0; o < net.n_outputs(); ++o) {
      Var vsum{}, dsum{};
      for (Eigen::Index i = 0; i < pp.lo.rows(); ++i) {
        std::vector<double> xl(pp.lo.row(i).begin(), pp.lo.row(i).end());
        std::vector<double> xh(pp.hi.row(i).begin(), pp.hi.row(i).end());
        DerivBundle<Var> bl = net.forward_bundle<Var>(pspan, xl, breq, lift);
        DerivBundle<Var> bh = net.forward_bundle<Var>(pspan, xh, breq, lift);
        Var dv = bl.value[static_cast<std::size_t>(o)] - bh.value[static_cast<std::size_t>(o)];
        Var dd = bl.deriv(o, pp.axis, 1) - bh.deriv(o, pp.axis, 1);
        vsum = (i == 0) ? dv * dv : vsum + dv * dv;
        dsum = (i == 0) ? dd * dd : dsum + dd * dd;
      }
      pool_bc(vsum, static_cast<double>(pp.lo.rows()));
      pool_bc(dsum, static_cast<double>(pp.lo.rows()));
    }
  }
  if (batch.bc_points.rows() > 0) {
    for (std::size_t c = 0; c < batch.bc_outputs.size(); ++c) {
      const int o = batch.bc_outputs[c];
      Var s{};
      for (Eigen::Index i = 0; i < batch.bc_points.rows(); ++i) {
        std::vector<double> x(batch.bc_points.row(i).begin(), batch.bc_points.row(i).end());
        DerivBundle<Var> bb = net.forward_bundle<Var>(pspan, x, vreq, lift);
        Var d = bb.value[static_cast<std::size_t>(o)] -
                batch.bc_values(i, static_cast<Eigen::Index>(c));
        s = (i == 0) ? d * d : s + d * d;
      }
      pool_bc(s, static_cast<double>(batch.bc_points.rows()));
    }
  }
  if (bc_count > 0.0) {
    Var bc_ms = (1.0 / bc_count) * bc_sum;
    out.report.bc = T.value(bc_ms);
    total = total + weights.bc * bc_ms;
  }

  if (batch.ic_points.rows() > 0) {
    Var ic_sum{};
    double ic_count = 0.0;
    for (int o = 0; o < net.n_outputs(); ++o) {
      Var s{};
      for (Eigen::Index i = 0; i < batch.ic_points.rows(); ++i) {
        std::vector<double> x(batch.ic_points.row(i).begin(), batch.ic_points.row(i).end());
        DerivBundle<Var> ib = net.forward_bundle<Var>(pspan, x, vreq, lift);
        Var d = ib.value[static_cast<std::size_t>(o)] - batch.ic_values(i, o);
        s = (i == 0) ? d * d : s + d * d;
      }
      ic_sum = ic_count > 0.0 ? ic_sum + s : s;
      ic_count += static_cast<double>(batch.ic_points.rows());
    }
    Var ic_ms = (1.0 / ic_count) * ic_sum;
    out.report.ic = T.value(ic_ms);
    total = total + weights.ic * ic_ms;
  }

  out.report.total = T.value(total);
  if (want_grad) out.grad = T.backward(total, static_cast<int>(params.size()));
  return out;
}

}  // namespace scpinn
