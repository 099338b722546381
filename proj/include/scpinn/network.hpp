#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "scpinn/activations.hpp"
#include "scpinn/bundle.hpp"
#include "scpinn/jet.hpp"
#include "scpinn/rng.hpp"

namespace scpinn {

/// One named output head with its own hidden layers after the shared trunk.
/// Flow-type problems give u, v, p separate branches; single-field problems
/// use no branches and read outputs from one linear head.
struct BranchSpec {
  std::string name;
  std::vector<int> widths;

  friend bool operator==(const BranchSpec&, const BranchSpec&) = default;
};

struct NetworkConfig {
  std::vector<std::string> inputs;                      // axis names, e.g. {"x","t"}
  std::vector<std::pair<double, double>> input_range;   // physical (lo, hi) per axis
  std::vector<int> trunk;                               // hidden widths, first layer is the sin layer
  bool skip_concat = false;                             // heads read all trunk activations, concatenated
  std::vector<BranchSpec> branches;                     // empty: single head over `outputs`
  std::vector<std::string> outputs;                     // ignored when branches are present
  Act activation = Act::Silu;
  double frequency = 2.0;                               // F in sin(F*pi*(W x + b))
};

/// Row-major weight block within the flat parameter vector.
/// b_off is -1 for the bias-free output heads.
struct ParamBlock {
  int w_off = 0;
  int rows = 0;
  int cols = 0;
  int b_off = -1;
};

/// Immutable architecture: validated config plus the parameter layout.
/// Parameters themselves always travel as one flat vector; every view into
/// them (scalar forward here, the batched engine, checkpoints, the
/// optimizer) shares this layout.
class Network {
 public:
  explicit Network(NetworkConfig cfg);

  const NetworkConfig& config() const { return cfg_; }
  int input_dim() const { return static_cast<int>(cfg_.inputs.size()); }
  int n_outputs() const { return static_cast<int>(output_names_.size()); }
  const std::vector<std::string>& output_names() const { return output_names_; }
  int n_params() const { return n_params_; }

  const std::vector<ParamBlock>& trunk_blocks() const { return trunk_; }
  struct BranchLayout {
    std::vector<ParamBlock> hidden;
    ParamBlock head;
  };
  const std::vector<BranchLayout>& branch_layouts() const { return branches_; }
  int head_input_width() const { return head_input_width_; }

  /// Output index -> (branch, row within that branch's head).
  std::pair<int, int> output_location(int out) const { return output_loc_[out]; }

  /// Per-axis affine normalization x -> a*x + c mapping the physical range
  /// onto [-1, 1]. Derivatives reported by forward passes are physical
  /// because input jets pass through this map like any other linear layer.
  double norm_scale(int axis) const { return norm_a_[axis]; }
  double norm_offset(int axis) const { return norm_c_[axis]; }

  /// He-normal weights (std = sqrt(2 / fan_in)), zero biases, reproducible
  /// per (seed, layer) so layouts can grow without reshuffling earlier
  /// layers' draws.
  Eigen::VectorXd init_params(std::uint64_t seed) const;

  /// Reference forward pass over any scalar type carrying jets. Inputs are
  /// one jet per axis; all parameters arrive as a flat span matching the
  /// layout. Returns one jet per output.
  template <class S>
  std::vector<JetT<S>> forward_jets(std::span<const S> params,
                                    std::span<const JetT<S>> x) const;

  /// Plain values at a point.
  Eigen::VectorXd forward(const Eigen::VectorXd& params, const Eigen::VectorXd& x) const;

  /// Value plus the derivatives a residual needs, via one jet pass per axis.
  /// make_scalar lifts doubles into S (identity for double, tape constants
  /// for tape variables).
  template <class S, class F>
  DerivBundle<S> forward_bundle(std::span<const S> params, std::span<const double> x,
                                const DerivReq& req, F&& make_scalar) const;

  /// Canonical one-line description; equal configs produce equal strings.
  std::string canonical_string() const;
  /// FNV-1a of canonical_string(), the architecture identity checkpoints pin.
  std::uint64_t config_hash() const;

 private:
  template <class S>
  JetT<S> affine_row(std::span<const S> params, const ParamBlock& blk, int row,
                     const std::vector<JetT<S>>& in) const;

  NetworkConfig cfg_;
  std::vector<std::string> output_names_;
  std::vector<ParamBlock> trunk_;
  std::vector<BranchLayout> branches_;
  std::vector<std::pair<int, int>> output_loc_;
  std::vector<double> norm_a_, norm_c_;
  int head_input_width_ = 0;
  int n_params_ = 0;
};

/// Writes "#SCALEPARAMS v1 <hash> <count>" and the raw little-endian
/// doubles. load refuses (IntegrityError) on magic/hash/length mismatch or
/// truncation, before touching the parameter storage.
void save_checkpoint(const std::string& path, const Network& net,
                     const Eigen::VectorXd& params);
Eigen::VectorXd load_checkpoint(const std::string& path, const Network& net);

// ---------------------------------------------------------------------------
// template implementations

template <class S>
JetT<S> Network::affine_row(std::span<const S> params, const ParamBlock& blk, int row,
                            const std::vector<JetT<S>>& in) const {
  JetT<S> z = scale(params[static_cast<std::size_t>(blk.w_off + row * blk.cols)], in[0]);
  for (int c = 1; c < blk.cols; ++c)
    z = z + scale(params[static_cast<std::size_t>(blk.w_off + row * blk.cols + c)],
                  in[static_cast<std::size_t>(c)]);
  if (blk.b_off >= 0) z = shift(z, params[static_cast<std::size_t>(blk.b_off + row)]);
  return z;
}

template <class S>
std::vector<JetT<S>> Network::forward_jets(std::span<const S> params,
                                           std::span<const JetT<S>> x) const {
  const int dim = input_dim();

  // Normalize inputs onto [-1, 1]; an affine map, so jets pass through it.
  std::vector<JetT<S>> act;
  act.reserve(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    JetT<S> j = scale(norm_a_[i], x[static_cast<std::size_t>(i)]);
    j.c(0) = j.c(0) + norm_c_[i];
    act.push_back(std::move(j));
  }

  std::vector<JetT<S>> concat;  // all trunk activations, for skip_concat heads
  for (std::size_t l = 0; l < trunk_.size(); ++l) {
    const ParamBlock& blk = trunk_[l];
    std::vector<JetT<S>> next(static_cast<std::size_t>(blk.rows));
    for (int r = 0; r < blk.rows; ++r) {
      JetT<S> z = affine_row(params, blk, r, act);
      if (l == 0) {
        // Embedding layer: sin(F*pi*z) regardless of the hidden activation.
        z = scale(cfg_.frequency * 3.14159265358979323846, z);
        next[static_cast<std::size_t>(r)] = activate(Act::Sin, z);
      } else {
        next[static_cast<std::size_t>(r)] = activate(cfg_.activation, z);
      }
    }
    act = std::move(next);
    if (cfg_.skip_concat) concat.insert(concat.end(), act.begin(), act.end());
  }
  const std::vector<JetT<S>>& head_in = cfg_.skip_concat ? concat : act;

  std::vector<JetT<S>> out(static_cast<std::size_t>(n_outputs()));
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    std::vector<JetT<S>> a = head_in;
    for (const ParamBlock& blk : branches_[b].hidden) {
      std::vector<JetT<S>> next(static_cast<std::size_t>(blk.rows));
      for (int r = 0; r < blk.rows; ++r)
        next[static_cast<std::size_t>(r)] = activate(cfg_.activation, affine_row(params, blk, r, a));
      a = std::move(next);
    }
    const ParamBlock& head = branches_[b].head;
    for (int r = 0; r < head.rows; ++r) {
      // Map (branch, row) back to the flat output index.
      for (std::size_t o = 0; o < output_loc_.size(); ++o)
        if (output_loc_[o] == std::make_pair(static_cast<int>(b), r))
          out[o] = affine_row(params, head, r, a);
    }
  }
  return out;
}

template <class S, class F>
DerivBundle<S> Network::forward_bundle(std::span<const S> params, std::span<const double> x,
                                       const DerivReq& req, F&& make_scalar) const {
  const int dim = input_dim();
  DerivBundle<S> b;
  b.coord.reserve(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) b.coord.push_back(make_scalar(x[static_cast<std::size_t>(i)]));
  b.value.resize(static_cast<std::size_t>(n_outputs()));
  b.d.assign(static_cast<std::size_t>(n_outputs()),
             std::vector<std::vector<S>>(static_cast<std::size_t>(dim)));

  bool have_value = false;
  for (int axis = 0; axis < dim; ++axis) {
    const int m = req.axis_order[static_cast<std::size_t>(axis)];
    if (m == 0 && have_value) continue;

    std::vector<JetT<S>> xj(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      JetT<S> j;
      j.set_order(m);
      j.c(0) = make_scalar(x[static_cast<std::size_t>(i)]);
      for (int k = 1; k <= m; ++k) j.c(k) = make_scalar(i == axis && k == 1 ? 1.0 : 0.0);
      xj[static_cast<std::size_t>(i)] = std::move(j);
    }
    std::vector<JetT<S>> outs = forward_jets<S>(params, xj);
    for (int o = 0; o < n_outputs(); ++o) {
      if (!have_value) b.value[static_cast<std::size_t>(o)] = outs[static_cast<std::size_t>(o)].c(0);
      auto& dst = b.d[static_cast<std::size_t>(o)][static_cast<std::size_t>(axis)];
      dst.resize(static_cast<std::size_t>(m));
      for (int k = 1; k <= m; ++k) dst[static_cast<std::size_t>(k - 1)] = outs[static_cast<std::size_t>(o)].c(k);
    }
    have_value = true;
  }

  if (!have_value) {
    // Value-only request: a single order-0 pass.
    std::vector<JetT<S>> xj(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      JetT<S> j;
      j.set_order(0);
      j.c(0) = make_scalar(x[static_cast<std::size_t>(i)]);
      xj[static_cast<std::size_t>(i)] = std::move(j);
    }
    std::vector<JetT<S>> outs = forward_jets<S>(params, xj);
    for (int o = 0; o < n_outputs(); ++o) b.value[static_cast<std::size_t>(o)] = outs[static_cast<std::size_t>(o)].c(0);
  }
  return b;
}

}  // namespace scpinn
