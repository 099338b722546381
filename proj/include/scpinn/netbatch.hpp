#pragma once

#include <Eigen/Core>
#include <vector>

#include "scpinn/bundle.hpp"
#include "scpinn/network.hpp"

namespace scpinn {

/// Order of derivative streams in the stacked matrices: stream 0 carries
/// values, then each axis contributes streams for derivative orders
/// 1..axis_order. The value stream is shared by every axis; that sharing is
/// what makes the batched pass cheaper than per-axis jet evaluation.
struct StreamPlan {
  struct Stream {
    int axis;   // -1 for the value stream
    int order;  // 0 for the value stream
  };
  std::vector<Stream> streams;

  static StreamPlan make(const DerivReq& req);
  int count() const { return static_cast<int>(streams.size()); }
  /// Stream index of (axis, order); order 0 maps to the value stream.
  int index(int axis, int order) const;
};

/// Batched forward/backward evaluation of a Network over many points at
/// once, carrying per-axis derivative jets in stacked row blocks so each
/// layer is one GEMM plus an elementwise composition. Produces the same
/// numbers as the scalar jet/tape reference path; tests pin the agreement.
///
/// The engine is stateless between calls; all per-evaluation storage lives
/// in the caller-provided Workspace so training loops can reuse buffers.
class NetBatch {
 public:
  explicit NetBatch(const Network& net) : net_(&net) {}

  struct LayerCache {
    Eigen::MatrixXd Z;                 // stacked pre-activation (post frequency scaling)
    Eigen::MatrixXd A;                 // stacked post-activation
    std::vector<Eigen::ArrayXXd> psi;  // activation derivative tables at the value block
  };

  struct Workspace {
    StreamPlan plan;
    DerivReq req;
    Eigen::Index n = 0;
    Eigen::MatrixXd A0;  // stacked normalized input streams
    std::vector<LayerCache> trunk;
    Eigen::MatrixXd head_in;  // concatenated trunk activations when skip_concat
    std::vector<std::vector<LayerCache>> branches;
    std::vector<Eigen::MatrixXd> head_out;  // per branch, stacked head outputs
  };

  /// Per-output, per-stream value arrays (each of length n).
  struct Outputs {
    StreamPlan plan;
    std::vector<std::vector<Eigen::ArrayXd>> val;
  };

  /// X holds one point per row, physical coordinates. With record set the
  /// pass keeps everything backward() needs (plus one extra derivative
  /// table order); without it only outputs are produced, which is how
  /// snapshot evaluations avoid paying for gradients. The workspace is
  /// caller-owned purely so buffers can be reused across iterations.
  Outputs forward(const Eigen::VectorXd& params, const Eigen::MatrixXd& X, const DerivReq& req,
                  Workspace& ws, bool record) const;

  /// adj[o][s]: adjoint of output o, stream s (empty array = zero). Adds
  /// parameter gradients into grad, which must be of size n_params.
  void backward(const Eigen::VectorXd& params, const Workspace& ws,
                const std::vector<std::vector<Eigen::ArrayXd>>& adj,
                Eigen::VectorXd& grad) const;

  /// Convenience: bundle of plain values/derivatives at a batch (no tape).
  DerivBundle<Eigen::ArrayXd> forward_bundle(const Eigen::VectorXd& params,
                                             const Eigen::MatrixXd& X,
                                             const DerivReq& req) const;

 private:
  void activation_forward(Act act, const StreamPlan& plan, Eigen::Index n, int max_table,
                          const Eigen::MatrixXd& Z, Eigen::MatrixXd& A,
                          std::vector<Eigen::ArrayXXd>& psi) const;
  void activation_backward(const StreamPlan& plan, Eigen::Index n, const LayerCache& cache,
                           const Eigen::MatrixXd& dA, Eigen::MatrixXd& dZ) const;

  const Network* net_;
};

}  // namespace scpinn
