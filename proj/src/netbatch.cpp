#include "scpinn/netbatch.hpp"

#include <cassert>

#include "scpinn/errors.hpp"

namespace scpinn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> weight(const Eigen::VectorXd& p, const ParamBlock& blk) {
  return {p.data() + blk.w_off, blk.rows, blk.cols};
}
Eigen::Map<const Eigen::VectorXd> bias(const Eigen::VectorXd& p, const ParamBlock& blk) {
  return {p.data() + blk.b_off, blk.rows};
}
Eigen::Map<RowMat> weight_grad(Eigen::VectorXd& g, const ParamBlock& blk) {
  return {g.data() + blk.w_off, blk.rows, blk.cols};
}
Eigen::Map<Eigen::VectorXd> bias_grad(Eigen::VectorXd& g, const ParamBlock& blk) {
  return {g.data() + blk.b_off, blk.rows};
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

StreamPlan StreamPlan::make(const DerivReq& req) {
  StreamPlan p;
  p.streams.push_back({-1, 0});
  for (int a = 0; a < static_cast<int>(req.axis_order.size()); ++a)
    for (int k = 1; k <= req.axis_order[static_cast<std::size_t>(a)]; ++k)
      p.streams.push_back({a, k});
  return p;
}

int StreamPlan::index(int axis, int order) const {
  if (order == 0) return 0;
  for (int s = 1; s < count(); ++s)
    if (streams[static_cast<std::size_t>(s)].axis == axis &&
        streams[static_cast<std::size_t>(s)].order == order)
      return s;
  assert(false && "stream not in plan");
  return -1;
}

void NetBatch::activation_forward(Act act, const StreamPlan& plan, Eigen::Index n, int max_table,
                                  const Eigen::MatrixXd& Z, Eigen::MatrixXd& A,
                                  std::vector<Eigen::ArrayXXd>& psi) const {
  const Eigen::Index w = Z.cols();
  psi.resize(static_cast<std::size_t>(max_table) + 1);
  for (auto& t : psi) t.resize(n, w);
  Eigen::ArrayXXd zv = Z.middleRows(0, n).array();
  act_derivs(act, max_table, zv, psi.data());

  A.resize(Z.rows(), w);
  A.middleRows(0, n) = psi[0].matrix();

  // One axis at a time: higher-order output streams mix that axis's own
  // lower-order input streams through the composition formulas.
  const auto& req_axes = plan.streams;
  for (int s = 1; s < plan.count(); ++s) {
    if (req_axes[static_cast<std::size_t>(s)].order != 1) continue;
    const int axis = req_axes[static_cast<std::size_t>(s)].axis;
    int m = 1;
    for (const auto& st : req_axes)
      if (st.axis == axis && st.order > m) m = st.order;

    auto zblk = [&](int k) { return Z.middleRows(plan.index(axis, k) * n, n).array(); };
    auto ablk = [&](int k) { return A.middleRows(plan.index(axis, k) * n, n).array(); };

    auto z1 = zblk(1);
    ablk(1) = psi[1] * z1;
    if (m >= 2) {
      auto z2 = zblk(2);
      ablk(2) = psi[2] * z1.square() + psi[1] * z2;
      if (m >= 3) {
        auto z3 = zblk(3);
        ablk(3) = psi[3] * z1.cube() + 3.0 * psi[2] * z1 * z2 + psi[1] * z3;
        if (m >= 4) {
          auto z4 = zblk(4);
          ablk(4) = psi[4] * z1.square().square() + 6.0 * psi[3] * z1.square() * z2 +
                    psi[2] * (3.0 * z2.square() + 4.0 * z1 * z3) + psi[1] * z4;
        }
      }
    }
  }
}

void NetBatch::activation_backward(const StreamPlan& plan, Eigen::Index n,
                                   const LayerCache& cache, const Eigen::MatrixXd& dA,
                                   Eigen::MatrixXd& dZ) const {
  const auto& psi = cache.psi;
  dZ.resize(dA.rows(), dA.cols());

  auto zblk = [&](int axis, int k) {
    return cache.Z.middleRows(plan.index(axis, k) * n, n).array();
  };
  auto dablk = [&](int axis, int k) {
    return dA.middleRows(plan.index(axis, k) * n, n).array();
  };
  auto dzblk = [&](int axis, int k) {
    return dZ.middleRows(plan.index(axis, k) * n, n).array();
  };

  // Value stream: direct part, plus each derivative stream's dependence on
  // the pre-activation value through the psi tables (one order higher).
  dZ.middleRows(0, n).array() = psi[1] * dA.middleRows(0, n).array();

  for (int s = 1; s < plan.count(); ++s) {
    if (plan.streams[static_cast<std::size_t>(s)].order != 1) continue;
    const int axis = plan.streams[static_cast<std::size_t>(s)].axis;
    int m = 1;
    for (const auto& st : plan.streams)
      if (st.axis == axis && st.order > m) m = st.order;

    auto z1 = zblk(axis, 1);
    auto dB1 = dablk(axis, 1);
    dZ.middleRows(0, n).array() += psi[2] * z1 * dB1;
    dzblk(axis, 1) = psi[1] * dB1;
    if (m >= 2) {
      auto z2 = zblk(axis, 2);
      auto dB2 = dablk(axis, 2);
      dZ.middleRows(0, n).array() += (psi[3] * z1.square() + psi[2] * z2) * dB2;
      dzblk(axis, 1) += 2.0 * psi[2] * z1 * dB2;
      dzblk(axis, 2) = psi[1] * dB2;
      if (m >= 3) {
        auto z3 = zblk(axis, 3);
        auto dB3 = dablk(axis, 3);
        dZ.middleRows(0, n).array() +=
            (psi[4] * z1.cube() + 3.0 * psi[3] * z1 * z2 + psi[2] * z3) * dB3;
        dzblk(axis, 1) += (3.0 * psi[3] * z1.square() + 3.0 * psi[2] * z2) * dB3;
        dzblk(axis, 2) += 3.0 * psi[2] * z1 * dB3;
        dzblk(axis, 3) = psi[1] * dB3;
        if (m >= 4) {
          auto z4 = zblk(axis, 4);
          auto dB4 = dablk(axis, 4);
          dZ.middleRows(0, n).array() +=
              (psi[5] * z1.square().square() + 6.0 * psi[4] * z1.square() * z2 +
               psi[3] * (3.0 * z2.square() + 4.0 * z1 * z3) + psi[2] * z4) *
              dB4;
          dzblk(axis, 1) +=
              (4.0 * psi[4] * z1.cube() + 12.0 * psi[3] * z1 * z2 + 4.0 * psi[2] * z3) * dB4;
          dzblk(axis, 2) += (6.0 * psi[3] * z1.square() + 6.0 * psi[2] * z2) * dB4;
          dzblk(axis, 3) += 4.0 * psi[2] * z1 * dB4;
          dzblk(axis, 4) = psi[1] * dB4;
        }
      }
    }
  }
}

NetBatch::Outputs NetBatch::forward(const Eigen::VectorXd& params, const Eigen::MatrixXd& X,
                                    const DerivReq& req, Workspace& ws, bool record) const {
  const Network& net = *net_;
  const int d = net.input_dim();
  if (X.cols() != d) throw ConfigError("netbatch: point dimension mismatch");
  if (params.size() != net.n_params()) throw ConfigError("netbatch: parameter count mismatch");
  if (static_cast<int>(req.axis_order.size()) != d)
    throw ConfigError("netbatch: derivative request dimension mismatch");

  const Eigen::Index n = X.rows();
  ws.plan = StreamPlan::make(req);
  ws.req = req;
  ws.n = n;
  const StreamPlan& plan = ws.plan;
  const int S = plan.count();
  const int M = req.max_order();
  const int table_max = M + (record ? 1 : 0);

  // Stacked input: value block holds normalized coordinates; each axis's
  // order-1 block is the constant normalization slope in that column.
  ws.A0.setZero(S * n, d);
  for (int i = 0; i < d; ++i)
    ws.A0.col(i).head(n) =
        (net.norm_scale(i) * X.col(i).array() + net.norm_offset(i)).matrix();
  for (int s = 1; s < S; ++s)
    if (plan.streams[static_cast<std::size_t>(s)].order == 1) {
      const int axis = plan.streams[static_cast<std::size_t>(s)].axis;
      ws.A0.col(axis).segment(s * n, n).setConstant(net.norm_scale(axis));
    }

  const auto& trunk = net.trunk_blocks();
  ws.trunk.resize(trunk.size());
  const Eigen::MatrixXd* prev = &ws.A0;
  for (std::size_t l = 0; l < trunk.size(); ++l) {
    LayerCache& c = ws.trunk[l];
    c.Z.noalias() = (*prev) * weight(params, trunk[l]).transpose();
    c.Z.middleRows(0, n).rowwise() += bias(params, trunk[l]).transpose();
    Act act = net.config().activation;
    if (l == 0) {
      c.Z *= net.config().frequency * kPi;
      act = Act::Sin;
    }
    activation_forward(act, plan, n, table_max, c.Z, c.A, c.psi);
    prev = &c.A;
  }

  const Eigen::MatrixXd* head_in = prev;
  if (net.config().skip_concat) {
    ws.head_in.resize(S * n, net.head_input_width());
    Eigen::Index off = 0;
    for (const LayerCache& c : ws.trunk) {
      ws.head_in.middleCols(off, c.A.cols()) = c.A;
      off += c.A.cols();
    }
    head_in = &ws.head_in;
  }

  const auto& branches = net.branch_layouts();
  ws.branches.resize(branches.size());
  ws.head_out.resize(branches.size());
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const Eigen::MatrixXd* a = head_in;
    ws.branches[b].resize(branches[b].hidden.size());
    for (std::size_t j = 0; j < branches[b].hidden.size(); ++j) {
      LayerCache& c = ws.branches[b][j];
      c.Z.noalias() = (*a) * weight(params, branches[b].hidden[j]).transpose();
      c.Z.middleRows(0, n).rowwise() += bias(params, branches[b].hidden[j]).transpose();
      activation_forward(net.config().activation, plan, n, table_max, c.Z, c.A, c.psi);
      a = &c.A;
    }
    ws.head_out[b].noalias() = (*a) * weight(params, branches[b].head).transpose();
  }

  Outputs out;
  out.plan = plan;
  out.val.assign(static_cast<std::size_t>(net.n_outputs()), {});
  for (int o = 0; o < net.n_outputs(); ++o) {
    auto [b, r] = net.output_location(o);
    out.val[static_cast<std::size_t>(o)].resize(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s)
      out.val[static_cast<std::size_t>(o)][static_cast<std::size_t>(s)] =
          ws.head_out[static_cast<std::size_t>(b)].col(r).segment(s * n, n).array();
  }
  return out;
}

void NetBatch::backward(const Eigen::VectorXd& params, const Workspace& ws,
                        const std::vector<std::vector<Eigen::ArrayXd>>& adj,
                        Eigen::VectorXd& grad) const {
  const Network& net = *net_;
  const StreamPlan& plan = ws.plan;
  const Eigen::Index n = ws.n;
  const int S = plan.count();
  assert(grad.size() == net.n_params());

  const Eigen::MatrixXd* head_in =
      net.config().skip_concat ? &ws.head_in
                               : (ws.trunk.empty() ? &ws.A0 : &ws.trunk.back().A);

  Eigen::MatrixXd d_head_in = Eigen::MatrixXd::Zero(S * n, net.head_input_width());
  Eigen::MatrixXd dOut, dA, dZ;

  const auto& branches = net.branch_layouts();
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const ParamBlock& head = branches[b].head;
    dOut.setZero(S * n, head.rows);
    bool any = false;
    for (int o = 0; o < net.n_outputs(); ++o) {
      auto [bb, r] = net.output_location(o);
      if (bb != static_cast<int>(b)) continue;
      for (int s = 0; s < S; ++s) {
        const Eigen::ArrayXd& g = adj[static_cast<std::size_t>(o)][static_cast<std::size_t>(s)];
        if (g.size() == 0) continue;
        assert(g.size() == n);
        dOut.col(r).segment(s * n, n) = g.matrix();
        any = true;
      }
    }
    if (!any) continue;

    const Eigen::MatrixXd* a_last =
        branches[b].hidden.empty() ? head_in : &ws.branches[b].back().A;
    weight_grad(grad, head).noalias() += dOut.transpose() * (*a_last);
    dA.noalias() = dOut * weight(params, head);

    for (int j = static_cast<int>(branches[b].hidden.size()) - 1; j >= 0; --j) {
      const LayerCache& c = ws.branches[b][static_cast<std::size_t>(j)];
      activation_backward(plan, n, c, dA, dZ);
      const Eigen::MatrixXd* a_prev =
          (j == 0) ? head_in : &ws.branches[b][static_cast<std::size_t>(j - 1)].A;
      const ParamBlock& blk = branches[b].hidden[static_cast<std::size_t>(j)];
      weight_grad(grad, blk).noalias() += dZ.transpose() * (*a_prev);
      bias_grad(grad, blk).noalias() += dZ.middleRows(0, n).colwise().sum().transpose();
      dA.noalias() = dZ * weight(params, blk);
    }
    d_head_in += dA;
  }

  // Trunk, in reverse. Each layer receives adjoints from the next trunk
  // layer and, under skip_concat, its slice of the head input.
  const auto& trunk = net.trunk_blocks();
  Eigen::MatrixXd dA_next;  // adjoint of trunk layer l's activation
  for (int l = static_cast<int>(trunk.size()) - 1; l >= 0; --l) {
    const LayerCache& c = ws.trunk[static_cast<std::size_t>(l)];
    Eigen::MatrixXd dA_total;
    if (l == static_cast<int>(trunk.size()) - 1)
      dA_total = net.config().skip_concat ? Eigen::MatrixXd::Zero(S * n, c.A.cols()) : d_head_in;
    else
      dA_total = std::move(dA_next);
    if (net.config().skip_concat) {
      Eigen::Index off = 0;
      for (int k = 0; k < l; ++k) off += ws.trunk[static_cast<std::size_t>(k)].A.cols();
      dA_total += d_head_in.middleCols(off, c.A.cols());
    }

    activation_backward(plan, n, c, dA_total, dZ);
    if (l == 0) dZ *= net.config().frequency * kPi;
    const Eigen::MatrixXd* a_prev = (l == 0) ? &ws.A0 : &ws.trunk[static_cast<std::size_t>(l - 1)].A;
    const ParamBlock& blk = trunk[static_cast<std::size_t>(l)];
    weight_grad(grad, blk).noalias() += dZ.transpose() * (*a_prev);
    bias_grad(grad, blk).noalias() += dZ.middleRows(0, n).colwise().sum().transpose();
    if (l > 0) dA_next.noalias() = dZ * weight(params, blk);
  }
}

DerivBundle<Eigen::ArrayXd> NetBatch::forward_bundle(const Eigen::VectorXd& params,
                                                     const Eigen::MatrixXd& X,
                                                     const DerivReq& req) const {
  Workspace ws;
  Outputs out = forward(params, X, req, ws, /*record=*/false);
  DerivBundle<Eigen::ArrayXd> b;
  const int d = net_->input_dim();
  for (int i = 0; i < d; ++i) b.coord.push_back(X.col(i).array());
  const int no = net_->n_outputs();
  b.value.resize(static_cast<std::size_t>(no));
  b.d.assign(static_cast<std::size_t>(no),
             std::vector<std::vector<Eigen::ArrayXd>>(static_cast<std::size_t>(d)));
  for (int o = 0; o < no; ++o) {
    b.value[static_cast<std::size_t>(o)] = out.val[static_cast<std::size_t>(o)][0];
    for (int a = 0; a < d; ++a) {
      const int m = req.axis_order[static_cast<std::size_t>(a)];
      auto& dst = b.d[static_cast<std::size_t>(o)][static_cast<std::size_t>(a)];
      dst.resize(static_cast<std::size_t>(m));
      for (int k = 1; k <= m; ++k)
        dst[static_cast<std::size_t>(k - 1)] =
            out.val[static_cast<std::size_t>(o)][static_cast<std::size_t>(out.plan.index(a, k))];
    }
  }
  return b;
}

}  // namespace scpinn
