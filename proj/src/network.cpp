#include "scpinn/network.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "scpinn/errors.hpp"

namespace scpinn {

Network::Network(NetworkConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.inputs.empty()) throw ConfigError("network: no input axes");
  if (cfg_.trunk.empty()) throw ConfigError("network: empty trunk");
  if (cfg_.frequency <= 0.0) throw ConfigError("network: frequency must be positive");
  for (int w : cfg_.trunk)
    if (w <= 0) throw ConfigError("network: non-positive trunk width");
  if (cfg_.input_range.empty())
    cfg_.input_range.assign(cfg_.inputs.size(), {-1.0, 1.0});
  if (cfg_.input_range.size() != cfg_.inputs.size())
    throw ConfigError("network: input_range size mismatch");
  for (auto [lo, hi] : cfg_.input_range)
    if (!(hi > lo)) throw ConfigError("network: degenerate input range");

  if (cfg_.branches.empty()) {
    if (cfg_.outputs.empty()) throw ConfigError("network: no outputs");
    output_names_ = cfg_.outputs;
  } else {
    for (const BranchSpec& b : cfg_.branches) {
      if (b.name.empty()) throw ConfigError("network: unnamed branch");
      for (int w : b.widths)
        if (w <= 0) throw ConfigError("network: non-positive branch width");
      output_names_.push_back(b.name);
    }
  }

  // Normalization x -> a*x + c with a = 2/(hi-lo), c = -(hi+lo)/(hi-lo).
  for (auto [lo, hi] : cfg_.input_range) {
    norm_a_.push_back(2.0 / (hi - lo));
    norm_c_.push_back(-(hi + lo) / (hi - lo));
  }

  int off = 0;
  auto add_block = [&off](int rows, int cols, bool bias) {
    ParamBlock blk;
    blk.w_off = off;
    blk.rows = rows;
    blk.cols = cols;
    off += rows * cols;
    if (bias) {
      blk.b_off = off;
      off += rows;
    }
    return blk;
  };

  int in_w = input_dim();
  int concat_w = 0;
  for (int w : cfg_.trunk) {
    trunk_.push_back(add_block(w, in_w, /*bias=*/true));
    in_w = w;
    concat_w += w;
  }
  head_input_width_ = cfg_.skip_concat ? concat_w : in_w;

  if (cfg_.branches.empty()) {
    BranchLayout bl;
    bl.head = add_block(static_cast<int>(output_names_.size()), head_input_width_, /*bias=*/false);
    branches_.push_back(std::move(bl));
    for (int o = 0; o < static_cast<int>(output_names_.size()); ++o)
      output_loc_.emplace_back(0, o);
  } else {
    for (std::size_t b = 0; b < cfg_.branches.size(); ++b) {
      BranchLayout bl;
      int w = head_input_width_;
      for (int bw : cfg_.branches[b].widths) {
        bl.hidden.push_back(add_block(bw, w, /*bias=*/true));
        w = bw;
      }
      bl.head = add_block(1, w, /*bias=*/false);
      branches_.push_back(std::move(bl));
      output_loc_.emplace_back(static_cast<int>(b), 0);
    }
  }
  n_params_ = off;
}

Eigen::VectorXd Network::init_params(std::uint64_t seed) const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n_params_);
  Rng root(seed);
  int block_index = 0;
  auto fill = [&](const ParamBlock& blk) {
    Rng r = root.stream("init", static_cast<std::uint64_t>(block_index++));
    const double std = std::sqrt(2.0 / static_cast<double>(blk.cols));
    for (int i = 0; i < blk.rows * blk.cols; ++i) p[blk.w_off + i] = std * r.normal();
    // biases stay zero
  };
  for (const ParamBlock& blk : trunk_) fill(blk);
  for (const BranchLayout& bl : branches_) {
    for (const ParamBlock& blk : bl.hidden) fill(blk);
    fill(bl.head);
  }
  return p;
}

Eigen::VectorXd Network::forward(const Eigen::VectorXd& params, const Eigen::VectorXd& x) const {
  std::vector<JetT<double>> xj;
  for (int i = 0; i < input_dim(); ++i) xj.push_back(jet_constant(x[i], 0));
  std::vector<JetT<double>> outs = forward_jets<double>(
      std::span<const double>(params.data(), static_cast<std::size_t>(params.size())), xj);
  Eigen::VectorXd v(n_outputs());
  for (int o = 0; o < n_outputs(); ++o) v[o] = outs[static_cast<std::size_t>(o)].value();
  return v;
}

std::string Network::canonical_string() const {
  char buf[64];
  std::string s = "in=";
  for (std::size_t i = 0; i < cfg_.inputs.size(); ++i) {
    if (i) s += ',';
    s += cfg_.inputs[i];
    std::snprintf(buf, sizeof buf, ":%.17g:%.17g", cfg_.input_range[i].first,
                  cfg_.input_range[i].second);
    s += buf;
  }
  s += ";trunk=";
  for (std::size_t i = 0; i < cfg_.trunk.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(cfg_.trunk[i]);
  }
  s += ";skip=";
  s += cfg_.skip_concat ? '1' : '0';
  s += ";act=" + act_name(cfg_.activation);
  std::snprintf(buf, sizeof buf, ";freq=%.17g", cfg_.frequency);
  s += buf;
  s += ";heads=";
  if (cfg_.branches.empty()) {
    for (std::size_t i = 0; i < output_names_.size(); ++i) {
      if (i) s += ',';
      s += output_names_[i];
    }
  } else {
    for (std::size_t b = 0; b < cfg_.branches.size(); ++b) {
      if (b) s += '|';
      s += cfg_.branches[b].name + ':';
      for (std::size_t i = 0; i < cfg_.branches[b].widths.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(cfg_.branches[b].widths[i]);
      }
    }
  }
  return s;
}

std::uint64_t Network::config_hash() const {
  // FNV-1a, 64-bit.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical_string()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void save_checkpoint(const std::string& path, const Network& net, const Eigen::VectorXd& params) {
  if (params.size() != net.n_params())
    throw IntegrityError("checkpoint save: parameter count mismatch");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IntegrityError("checkpoint save: cannot open " + path);
  char header[96];
  std::snprintf(header, sizeof header, "#SCALEPARAMS v1 %016" PRIx64 " %lld\n", net.config_hash(),
                static_cast<long long>(params.size()));
  f << header;
  static_assert(std::endian::native == std::endian::little,
                "checkpoint format is little-endian");
  f.write(reinterpret_cast<const char*>(params.data()),
          static_cast<std::streamsize>(sizeof(double)) * params.size());
  if (!f) throw IntegrityError("checkpoint save: short write to " + path);
}

Eigen::VectorXd load_checkpoint(const std::string& path, const Network& net) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IntegrityError("checkpoint load: cannot open " + path);
  std::string header;
  if (!std::getline(f, header)) throw IntegrityError("checkpoint load: missing header");

  char magic[32];
  std::uint64_t hash = 0;
  long long count = -1;
  if (std::sscanf(header.c_str(), "%31s v1 %" SCNx64 " %lld", magic, &hash, &count) != 3 ||
      std::strcmp(magic, "#SCALEPARAMS") != 0)
    throw IntegrityError("checkpoint load: bad header in " + path);
  if (hash != net.config_hash())
    throw IntegrityError("checkpoint load: architecture hash mismatch in " + path);
  if (count != net.n_params())
    throw IntegrityError("checkpoint load: parameter count mismatch in " + path);

  Eigen::VectorXd p(count);
  f.read(reinterpret_cast<char*>(p.data()),
         static_cast<std::streamsize>(sizeof(double)) * count);
  if (f.gcount() != static_cast<std::streamsize>(sizeof(double)) * count)
    throw IntegrityError("checkpoint load: truncated payload in " + path);
  return p;
}

}  // namespace scpinn
