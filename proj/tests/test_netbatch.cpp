#include <doctest.h>

#include <cmath>

#include "scpinn/netbatch.hpp"
#include "scpinn/tape.hpp"
#include "test_helpers.hpp"

using namespace scpinn;

namespace {

Network random_arch(Rng& rng, const ProblemSpec& spec) {
  NetworkConfig cfg;
  const int layers = 1 + static_cast<int>(rng.below(3));
  for (int l = 0; l < layers; ++l) cfg.trunk.push_back(4 + static_cast<int>(rng.below(8)));
  cfg.skip_concat = rng.below(2) == 1;
  cfg.activation = static_cast<Act>(rng.below(3));
  cfg.frequency = 1.0 + rng.uniform01() * 3.0;
  cfg.outputs = spec.outputs;
  apply_problem_axes(spec, cfg);
  return Network(cfg);
}

Eigen::MatrixXd random_points(Rng& rng, const ProblemSpec& spec, int n) {
  Eigen::MatrixXd X(n, spec.dim());
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < spec.dim(); ++a) {
      auto [lo, hi] = spec.bounds[static_cast<std::size_t>(a)];
      X(i, a) = rng.uniform(lo, hi);
    }
  return X;
}

}  // namespace

TEST_SUITE("netbatch") {

TEST_CASE("batched forward matches the scalar jet path on random architectures") {
  Rng rng(2024);
  const std::vector<std::string> names = {"allen_cahn", "ks", "cavity", "gray_scott"};
  for (int trial = 0; trial < 12; ++trial) {
    const ProblemSpec spec = make_problem(names[trial % names.size()]);
    const Network net = random_arch(rng, spec);
    CAPTURE(trial);
    CAPTURE(net.canonical_string());
    const Eigen::VectorXd params = net.init_params(100 + static_cast<std::uint64_t>(trial));
    const DerivReq req = spec.residual_req();
    const int n = 7;
    const Eigen::MatrixXd X = random_points(rng, spec, n);

    const NetBatch engine(net);
    NetBatch::Workspace ws;
    const NetBatch::Outputs out = engine.forward(params, X, req, ws, false);

    std::span<const double> pspan(params.data(), static_cast<std::size_t>(params.size()));
    for (int i = 0; i < n; ++i) {
      std::vector<double> x(X.row(i).begin(), X.row(i).end());
      const DerivBundle<double> ref =
          net.forward_bundle<double>(pspan, x, req, [](double v) { return v; });
      for (int o = 0; o < net.n_outputs(); ++o)
        for (int a = 0; a < spec.dim(); ++a)
          for (int d = 0; d <= req.axis_order[static_cast<std::size_t>(a)]; ++d) {
            const double want = d == 0 ? ref.value[static_cast<std::size_t>(o)]
                                       : ref.deriv(o, a, d);
            const double got = out.val[static_cast<std::size_t>(o)]
                                      [static_cast<std::size_t>(out.plan.index(a, d))](i);
            CHECK(got == doctest::Approx(want).epsilon(1e-12));
          }
    }
  }
}

TEST_CASE("finite-difference stencils reproduce known derivatives") {
  // The stencils gate jet correctness below, so they are validated on a
  // function with exact derivatives first.
  const double x0 = 0.3;
  auto f = [&](double dx) { return std::sin(x0 + dx); };
  const double s = std::sin(x0), c = std::cos(x0);
  const double exact[] = {c, -s, -c, s};
  for (int k = 1; k <= 4; ++k) {
    CAPTURE(k);
    CHECK(test::fd_deriv(f, k, 0.02) == doctest::Approx(exact[k - 1]).epsilon(1e-8));
  }
}

TEST_CASE("jet derivatives through the network match finite differences") {
  Rng rng(77);
  const ProblemSpec spec = make_problem("ks");  // x-order up to 4
  for (int trial = 0; trial < 10; ++trial) {
    const Network net = random_arch(rng, spec);
    const Eigen::VectorXd params = net.init_params(static_cast<std::uint64_t>(trial));
    std::span<const double> pspan(params.data(), static_cast<std::size_t>(params.size()));
    DerivReq req;
    req.axis_order = {4, 1};
    const Eigen::MatrixXd X = random_points(rng, spec, 1);
    std::vector<double> x(X.row(0).begin(), X.row(0).end());
    const DerivBundle<double> jet =
        net.forward_bundle<double>(pspan, x, req, [](double v) { return v; });

    auto f = [&](double dx) {
      std::vector<double> xs = x;
      xs[0] += dx;
      DerivReq v;
      v.axis_order = {0, 0};
      return net.forward_bundle<double>(pspan, xs, v, [](double u) { return u; }).value[0];
    };
    const double h = 0.01;
    CAPTURE(trial);
    CHECK(jet.deriv(0, 0, 1) == doctest::Approx(test::fd_deriv_rich(f, 1, h)).epsilon(1e-6));
    CHECK(jet.deriv(0, 0, 2) == doctest::Approx(test::fd_deriv_rich(f, 2, h)).epsilon(1e-6));
    CHECK(jet.deriv(0, 0, 3) == doctest::Approx(test::fd_deriv_rich(f, 3, h)).epsilon(1e-4));
    CHECK(jet.deriv(0, 0, 4) == doctest::Approx(test::fd_deriv_rich(f, 4, h)).epsilon(1e-4));
  }
}

TEST_CASE("recorded backward agrees with the scalar tape") {
  Rng rng(4242);
  for (const std::string& name : test::benchmark_problems()) {
    CAPTURE(name);
    const ProblemSpec spec = make_problem(name);
    const Network net = random_arch(rng, spec);
    const Eigen::VectorXd params = net.init_params(9);
    const DerivReq req = spec.residual_req();
    const int n = 5;
    const Eigen::MatrixXd X = random_points(rng, spec, n);

    // Loss candidate: sum over points/outputs/streams of squared stream
    // values, a stand-in with nonzero adjoints everywhere.
    const NetBatch engine(net);
    NetBatch::Workspace ws;
    NetBatch::Outputs out = engine.forward(params, X, req, ws, true);
    const std::size_t n_streams = out.val[0].size();
    std::vector<std::vector<Eigen::ArrayXd>> adj(static_cast<std::size_t>(net.n_outputs()));
    for (int o = 0; o < net.n_outputs(); ++o)
      for (std::size_t st = 0; st < n_streams; ++st)
        adj[static_cast<std::size_t>(o)].push_back(
            2.0 * out.val[static_cast<std::size_t>(o)][st]);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
    engine.backward(params, ws, adj, grad);

    // Same quantity via the audited scalar tape.
    Tape tape;
    std::vector<Var> pv;
    pv.reserve(static_cast<std::size_t>(params.size()));
    for (Eigen::Index i = 0; i < params.size(); ++i)
      pv.push_back(tape.param(params[i], static_cast<int>(i)));
    Var total = tape.constant(0.0);
    std::span<const Var> pspan(pv.data(), pv.size());
    for (int i = 0; i < n; ++i) {
      std::vector<double> x(X.row(i).begin(), X.row(i).end());
      const DerivBundle<Var> b = net.forward_bundle<Var>(
          pspan, x, req, [&tape](double v) { return tape.constant(v); });
      for (int o = 0; o < net.n_outputs(); ++o)
        for (int a = 0; a < spec.dim(); ++a)
          for (int d = 1; d <= req.axis_order[static_cast<std::size_t>(a)]; ++d)
            total = total + b.deriv(o, a, d) * b.deriv(o, a, d);
      for (std::size_t o = 0; o < b.value.size(); ++o)
        total = total + b.value[o] * b.value[o];
    }
    const Eigen::VectorXd want = tape.backward(total, static_cast<int>(params.size()));
    const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
    CHECK((grad - want).cwiseAbs().maxCoeff() / scale < 1e-10);
  }
}

TEST_CASE("forward_bundle helper matches forward") {
  const ProblemSpec spec = make_problem("allen_cahn");
  const Network net = test::tiny_net(spec);
  const Eigen::VectorXd params = net.init_params(3);
  Rng rng(8);
  const Eigen::MatrixXd X = random_points(rng, spec, 9);
  const DerivReq req = spec.residual_req();
  const NetBatch engine(net);
  const DerivBundle<Eigen::ArrayXd> a = engine.forward_bundle(params, X, req);
  NetBatch::Workspace ws;
  const NetBatch::Outputs b = engine.forward(params, X, req, ws, false);
  for (int o = 0; o < net.n_outputs(); ++o) {
    const auto so = static_cast<std::size_t>(o);
    CHECK((a.value[so] == b.val[so][0]).all());
    for (int ax = 0; ax < spec.dim(); ++ax)
      for (int d = 1; d <= req.axis_order[static_cast<std::size_t>(ax)]; ++d)
        CHECK((a.deriv(o, ax, d) ==
               b.val[so][static_cast<std::size_t>(b.plan.index(ax, d))])
                  .all());
  }
}

}  // TEST_SUITE
