#include <doctest.h>

#include <array>
#include <cmath>

#include "scpinn/problems.hpp"
#include "scpinn/rng.hpp"

using namespace scpinn;

namespace {

// Empty derivative bundle shaped for the problem; tests fill in the few
// entries a residual reads. d[out][axis][order-1] indexing.
DerivBundle<double> empty_bundle(const ProblemSpec& spec, int max_order) {
  DerivBundle<double> b;
  b.coord.assign(static_cast<std::size_t>(spec.dim()), 0.0);
  b.value.assign(spec.outputs.size(), 0.0);
  b.d.assign(spec.outputs.size(),
             std::vector<std::vector<double>>(
                 static_cast<std::size_t>(spec.dim()),
                 std::vector<double>(static_cast<std::size_t>(max_order), 0.0)));
  return b;
}

// Derivative stack of u = sin(pi x) exp(-t) at (x, t) = (0.4, 0.25), frozen
// from an exact computation.
constexpr double kU = 0.74068355963582792631;
constexpr double kUx = 0.75606409868973858644;
constexpr double kUxx = -7.3102537199962997187;
constexpr double kUxxx = -7.4620535559339031299;
constexpr double kUxxxx = 72.149312287955335583;

}  // namespace

TEST_SUITE("problems") {

TEST_CASE("reaction-diffusion residual matches the manufactured value") {
  auto spec = make_problem("allen_cahn");
  auto b = empty_bundle(spec, 2);
  b.value[0] = kU;
  b.d[0][0][1] = kUxx;
  b.d[0][1][0] = -kU;
  auto r = pde_residual(spec, b);
  REQUIRE(r.size() == 1);
  CHECK(r[0] == doctest::Approx(-2.4116303854803875987).epsilon(1e-13));
}

TEST_CASE("dispersive wave residual matches the manufactured value") {
  auto spec = make_problem("kdv");
  auto b = empty_bundle(spec, 3);
  b.value[0] = kU;
  b.d[0][0][0] = kUx;
  b.d[0][0][2] = kUxxx;
  b.d[0][1][0] = -kU;
  auto r = pde_residual(spec, b);
  REQUIRE(r.size() == 1);
  CHECK(r[0] == doctest::Approx(-0.18429094562653045441).epsilon(1e-13));
}

TEST_CASE("fourth-order residual matches the manufactured value") {
  auto spec = make_problem("ks");
  auto b = empty_bundle(spec, 4);
  b.value[0] = kU;
  b.d[0][0][0] = kUx;
  b.d[0][0][1] = kUxx;
  b.d[0][0][3] = kUxxxx;
  b.d[0][1][0] = -kU;
  auto r = pde_residual(spec, b);
  REQUIRE(r.size() == 1);
  CHECK(r[0] == doctest::Approx(28.087100243037979714).epsilon(1e-13));
}

TEST_CASE("two-species residuals match the manufactured values") {
  // u = sin(pi x) cos(pi y) e^{-t} + 1, v = x^2 y e^{-2t} at (0.3, -0.2, 0.5).
  auto spec = make_problem("gray_scott");
  auto b = empty_bundle(spec, 2);
  b.value[0] = 1.3969794705866427082;
  b.d[0][0][0] = 0.90610590699566077817;
  b.d[0][1][0] = 0.90610590699566077817;
  b.d[0][0][1] = -3.9180303300440524623;
  b.d[0][1][1] = -3.9180303300440524623;
  b.d[0][2][0] = -0.39697947058664270824;
  b.value[1] = -0.0066218299410859617887;
  b.d[1][0][0] = -0.044145532940573078591;
  b.d[1][0][1] = -0.14715177646857692864;
  b.d[1][1][0] = 0.033109149705429808944;
  b.d[1][1][1] = 0.0;
  b.d[1][2][0] = 0.013243659882171923577;
  auto r = pde_residual(spec, b);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == doctest::Approx(17.110667123290821405).epsilon(1e-13));
  CHECK(r[1] == doctest::Approx(-0.69547979497370136139).epsilon(1e-13));
}

TEST_CASE("momentum and continuity residuals match a solenoidal field") {
  // Stream function x^2 y^3 (1 - x) with pressure xy at (0.6, 0.7); the
  // velocity is divergence-free by construction so continuity is exactly 0.
  auto spec = make_problem("cavity");
  auto b = empty_bundle(spec, 2);
  b.value[0] = 0.21168;
  b.d[0][0][0] = 0.1764;
  b.d[0][1][0] = 0.6048;
  b.d[0][0][1] = -2.352;
  b.d[0][1][1] = 0.864;
  b.value[1] = -0.04116;
  b.d[1][0][0] = 0.5488;
  b.d[1][1][0] = -0.1764;
  b.d[1][0][1] = 2.058;
  b.d[1][1][1] = -0.504;
  b.d[2][0][0] = 0.7;
  b.d[2][1][0] = 0.6;
  auto r = pde_residual(spec, b);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == doctest::Approx(0.716166784).epsilon(1e-13));
  CHECK(r[1] == doctest::Approx(0.719545608).epsilon(1e-13));
  CHECK(r[2] == 0.0);
}

TEST_CASE("steady test problem subtracts its source term") {
  auto spec = make_problem("poisson1d");
  Eigen::MatrixXd pts(1, 1);
  pts(0, 0) = 0.3;
  Eigen::MatrixXd src = residual_source(spec, pts);
  REQUIRE(src.rows() == 1);
  REQUIRE(src.cols() == 1);
  CHECK(src(0, 0) == doctest::Approx(M_PI * M_PI * std::sin(0.3 * M_PI)).epsilon(1e-15));

  auto b = empty_bundle(spec, 2);
  b.d[0][0][1] = -2.0;
  std::vector<double> lifted = {src(0, 0)};
  auto r = pde_residual(spec, b, &lifted);
  REQUIRE(r.size() == 1);
  CHECK(r[0] == doctest::Approx(2.0 - src(0, 0)).epsilon(1e-14));

  // Benchmark problems carry no explicit source.
  auto ac = make_problem("allen_cahn");
  CHECK(residual_source(ac, pts).cols() == 0);
}

TEST_CASE("correction term matches hand values with and without Laplacian") {
  const double tau_sc = 0.1, tau_alpha = 1.5;

  // Two spatial axes: S = F / tau_sc - (gamma / tau_alpha) * lap(F).
  auto gs = make_problem("gray_scott", {{"gamma_u", 0.2}});
  auto cur = empty_bundle(gs, 2);
  auto snap = empty_bundle(gs, 2);
  cur.value[0] = 0.7;
  snap.value[0] = 0.4;
  cur.d[0][0][1] = -1.5;
  snap.d[0][0][1] = 0.25;
  cur.d[0][1][1] = 0.2;
  snap.d[0][1][1] = -0.1;
  auto s2 = correction_term(gs, cur, snap, tau_sc, tau_alpha);
  REQUIRE(s2.size() == 2);
  CHECK(s2[0] == doctest::Approx(3.1933333333333333333).epsilon(1e-14));
  CHECK(s2[1] == 0.0);

  // One spatial axis drops the y contribution.
  auto ac = make_problem("allen_cahn", {{"gamma_u", 0.2}});
  auto cur1 = empty_bundle(ac, 2);
  auto snap1 = empty_bundle(ac, 2);
  cur1.value[0] = 0.7;
  snap1.value[0] = 0.4;
  cur1.d[0][0][1] = -1.5;
  snap1.d[0][0][1] = 0.25;
  auto s1 = correction_term(ac, cur1, snap1, tau_sc, tau_alpha);
  REQUIRE(s1.size() == 1);
  CHECK(s1[0] == doctest::Approx(3.2333333333333333333).epsilon(1e-14));

  // The continuity pairing takes the plain pressure increment, so gamma is
  // irrelevant there.
  auto cav = make_problem("cavity", {{"gamma_p", 5.0}});
  auto curc = empty_bundle(cav, 2);
  auto snapc = empty_bundle(cav, 2);
  curc.value[2] = 0.7;
  snapc.value[2] = 0.4;
  auto sc = correction_term(cav, curc, snapc, tau_sc, tau_alpha);
  REQUIRE(sc.size() == 3);
  CHECK(sc[0] == 0.0);
  CHECK(sc[1] == 0.0);
  CHECK(sc[2] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("problem construction pins axes, coefficients, and pairings") {
  auto ac = make_problem("allen_cahn");
  CHECK(ac.axes == std::vector<std::string>{"x", "t"});
  CHECK(ac.bounds == std::vector<std::pair<double, double>>{{-1.0, 1.0}, {0.0, 1.0}});
  CHECK(ac.coeff.at("alpha") == 1e-4);
  CHECK(ac.coeff.at("delta") == 5.0);
  CHECK(ac.gamma == std::vector<double>{1e-4});
  CHECK(ac.corr_map == std::vector<std::pair<int, bool>>{{0, true}});
  CHECK(ac.n_equations == 1);
  CHECK(ac.axis_t() == 1);

  auto kdv = make_problem("kdv");
  CHECK(kdv.coeff.at("nu") == 0.022 * 0.022);
  CHECK(kdv.gamma[0] == doctest::Approx(0.022).epsilon(1e-15));

  auto ks = make_problem("ks");
  CHECK(ks.bounds[0].second == doctest::Approx(2.0 * M_PI));
  CHECK(ks.bounds[1].second == 0.4);
  CHECK(ks.coeff.at("a1") == 100.0 / 16.0);
  CHECK(ks.gamma == std::vector<double>{100.0 / 256.0});

  auto gs = make_problem("gray_scott");
  CHECK(gs.spatial_dims == 2);
  CHECK(gs.outputs == std::vector<std::string>{"u", "v"});
  CHECK(gs.gamma == std::vector<double>{0.2, 0.1});
  CHECK(gs.corr_map == std::vector<std::pair<int, bool>>{{0, true}, {1, true}});
  CHECK(gs.bounds.back().second == 0.5);

  auto cav = make_problem("cavity");
  CHECK_FALSE(cav.time_dependent);
  CHECK(cav.outputs == std::vector<std::string>{"u", "v", "p"});
  CHECK(cav.gamma == std::vector<double>{1.0 / 400.0, 1.0 / 400.0, 0.0});
  CHECK(cav.corr_map ==
        std::vector<std::pair<int, bool>>{{0, true}, {1, true}, {2, false}});
  CHECK(cav.bc == BcKind::CavityWalls);

  auto po = make_problem("poisson1d");
  CHECK_FALSE(po.time_dependent);
  CHECK(po.gamma == std::vector<double>{1.0});
  CHECK(po.bc == BcKind::DirichletZero);
}

TEST_CASE("derivative requirements cover each residual exactly") {
  CHECK(make_problem("allen_cahn").residual_req().axis_order == std::vector<int>{2, 1});
  CHECK(make_problem("kdv").residual_req().axis_order == std::vector<int>{3, 1});
  CHECK(make_problem("ks").residual_req().axis_order == std::vector<int>{4, 1});
  CHECK(make_problem("gray_scott").residual_req().axis_order == std::vector<int>{2, 2, 1});
  CHECK(make_problem("cavity").residual_req().axis_order == std::vector<int>{2, 2});
  CHECK(make_problem("poisson1d").residual_req().axis_order == std::vector<int>{2});

  // Snapshots need spatial seconds only where a correction smooths.
  CHECK(make_problem("allen_cahn").snapshot_req().axis_order == std::vector<int>{2, 0});
  CHECK(make_problem("gray_scott").snapshot_req().axis_order == std::vector<int>{2, 2, 0});
  CHECK(make_problem("cavity").snapshot_req().axis_order == std::vector<int>{2, 2});
}

TEST_CASE("coefficient overrides re-derive dependent scales") {
  auto ac = make_problem("allen_cahn", {{"alpha", 0.5}, {"t_end", 2.5}});
  CHECK(ac.coeff.at("alpha") == 0.5);
  CHECK(ac.gamma == std::vector<double>{0.5});
  CHECK(ac.bounds.back().second == 2.5);

  auto kdv = make_problem("kdv", {{"nu", 0.01}});
  CHECK(kdv.gamma[0] == doctest::Approx(0.1).epsilon(1e-15));

  // An explicit gamma wins over the derived one and leaves physics alone.
  auto g = make_problem("allen_cahn", {{"gamma_u", 0.7}});
  CHECK(g.gamma == std::vector<double>{0.7});
  CHECK(g.coeff.at("alpha") == 1e-4);

  auto cav = make_problem("cavity", {{"Re", 1000.0}, {"gamma_p", 0.3}});
  CHECK(cav.gamma[0] == 1.0 / 1000.0);
  CHECK(cav.gamma[2] == 0.3);
}

TEST_CASE("construction rejects invalid names and values") {
  CHECK_THROWS_AS(make_problem("burgers"), ConfigError);
  CHECK_THROWS_AS(make_problem("allen_cahn", {{"beta", 1.0}}), ConfigError);
  CHECK_THROWS_AS(make_problem("allen_cahn", {{"alpha", 0.0}}), ConfigError);
  CHECK_THROWS_AS(make_problem("allen_cahn", {{"alpha", -1.0}}), ConfigError);
  CHECK_THROWS_AS(make_problem("allen_cahn", {{"delta", -1.0}}), ConfigError);
  CHECK_NOTHROW(make_problem("allen_cahn", {{"delta", 0.0}}));
  CHECK_THROWS_AS(make_problem("allen_cahn", {{"t_end", 0.0}}), ConfigError);
  CHECK_THROWS_AS(make_problem("allen_cahn", {{"gamma_u", -0.1}}), ConfigError);
  CHECK_THROWS_AS(make_problem("cavity", {{"t_end", 1.0}}), ConfigError);
  CHECK_THROWS_AS(make_problem("cavity", {{"Re", -5.0}}), ConfigError);
  CHECK_THROWS_AS(make_problem("poisson1d", {{"alpha", 1.0}}), ConfigError);
}

TEST_CASE("initial conditions match their closed forms") {
  auto ac = make_problem("allen_cahn");
  auto kdv = make_problem("kdv");
  auto ks = make_problem("ks");
  auto gs = make_problem("gray_scott");
  for (double x : {-0.9, -0.3, 0.0, 0.4, 1.0}) {
    std::array<double, 2> xy = {x, 0.0};
    CHECK(ac.ic(0, xy) == x * x * std::cos(M_PI * x));
    CHECK(kdv.ic(0, xy) == std::cos(M_PI * x));
    CHECK(ks.ic(0, xy) == std::cos(x) * (1.0 + std::sin(x)));
  }
  std::array<double, 2> xy = {0.3, -0.4};
  const double du = (0.3 + 0.05) * (0.3 + 0.05) + (-0.4 + 0.02) * (-0.4 + 0.02);
  const double dv = (0.3 - 0.05) * (0.3 - 0.05) + (-0.4 - 0.02) * (-0.4 - 0.02);
  CHECK(gs.ic(0, xy) == doctest::Approx(1.0 - std::exp(-10.0 * du)).epsilon(1e-15));
  CHECK(gs.ic(1, xy) == doctest::Approx(std::exp(-10.0 * dv)).epsilon(1e-15));
  CHECK_THROWS_AS(make_problem("cavity").ic(0, xy), ConfigError);
}

TEST_CASE("sampled batches respect bounds and strict positive time") {
  for (const char* name : {"allen_cahn", "kdv", "ks", "gray_scott"}) {
    CAPTURE(name);
    auto spec = make_problem(name);
    Rng rng = Rng(11).stream("batch", 0);
    Batch b = sample_batch(spec, rng, 2000, 64, 32);
    REQUIRE(b.interior.rows() == 2000);
    REQUIRE(b.interior.cols() == spec.dim());
    for (int a = 0; a < spec.spatial_dims; ++a) {
      CHECK(b.interior.col(a).minCoeff() >= spec.bounds[static_cast<std::size_t>(a)].first);
      CHECK(b.interior.col(a).maxCoeff() < spec.bounds[static_cast<std::size_t>(a)].second);
    }
    const double t_end = spec.bounds.back().second;
    CHECK(b.interior.col(spec.axis_t()).minCoeff() > 0.0);
    CHECK(b.interior.col(spec.axis_t()).maxCoeff() <= t_end);

    // Periodic pairs share every free coordinate and sit on opposite faces.
    int paired_rows = 0;
    REQUIRE(b.periodic.size() == static_cast<std::size_t>(spec.spatial_dims));
    for (const auto& pp : b.periodic) {
      paired_rows += static_cast<int>(pp.lo.rows());
      const auto& ab = spec.bounds[static_cast<std::size_t>(pp.axis)];
      for (int i = 0; i < pp.lo.rows(); ++i) {
        CHECK(pp.lo(i, pp.axis) == ab.first);
        CHECK(pp.hi(i, pp.axis) == ab.second);
        for (int j = 0; j < spec.dim(); ++j)
          if (j != pp.axis) CHECK(pp.lo(i, j) == pp.hi(i, j));
      }
    }
    CHECK(paired_rows == 64);

    // Initial plane: t = 0 with values from the closed-form state.
    REQUIRE(b.ic_points.rows() == 32);
    CHECK(b.ic_points.col(spec.axis_t()).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < b.ic_points.rows(); ++i) {
      std::array<double, 2> xy = {b.ic_points(i, 0),
                                  spec.spatial_dims > 1 ? b.ic_points(i, 1) : 0.0};
      for (std::size_t o = 0; o < spec.outputs.size(); ++o)
        CHECK(b.ic_values(i, static_cast<Eigen::Index>(o)) ==
              spec.ic(static_cast<int>(o), xy));
    }
  }
}

TEST_CASE("equal seeds draw identical batches") {
  auto spec = make_problem("gray_scott");
  Rng a = Rng(99).stream("batch", 3);
  Rng b = Rng(99).stream("batch", 3);
  Batch ba = sample_batch(spec, a, 500, 40, 20);
  Batch bb = sample_batch(spec, b, 500, 40, 20);
  CHECK((ba.interior - bb.interior).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(ba.periodic.size() == bb.periodic.size());
  for (std::size_t k = 0; k < ba.periodic.size(); ++k) {
    CHECK((ba.periodic[k].lo - bb.periodic[k].lo).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ba.periodic[k].hi - bb.periodic[k].hi).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK((ba.ic_points - bb.ic_points).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ba.ic_values - bb.ic_values).cwiseAbs().maxCoeff() == 0.0);

  // A different stream index must not replay the same sequence.
  Rng c = Rng(99).stream("batch", 4);
  Batch bc = sample_batch(spec, c, 500, 40, 20);
  CHECK((ba.interior - bc.interior).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("driven box walls constrain both velocities, never pressure") {
  auto spec = make_problem("cavity", {{"u_lid", 2.0}});
  Rng rng = Rng(5).stream("batch", 0);
  Batch b = sample_batch(spec, rng, 100, 10, 0);
  CHECK(b.bc_outputs == std::vector<int>{0, 1});
  REQUIRE(b.bc_points.rows() == 10);
  REQUIRE(b.bc_values.cols() == 2);
  int lid_rows = 0;
  for (int i = 0; i < 10; ++i) {
    const double x = b.bc_points(i, 0), y = b.bc_points(i, 1);
    const bool on_lid = y == 1.0;
    const bool on_wall = x == 0.0 || x == 1.0 || y == 0.0;
    CHECK((on_lid || on_wall));
    if (on_lid) {
      ++lid_rows;
      CHECK(b.bc_values(i, 0) == 2.0);
    } else {
      CHECK(b.bc_values(i, 0) == 0.0);
    }
    CHECK(b.bc_values(i, 1) == 0.0);
  }
  // 10 points over 4 faces: the first two faces take the remainder.
  CHECK(lid_rows == 3);
  // Steady problem: no initial plane even when requested.
  CHECK(b.ic_points.rows() == 0);
}

TEST_CASE("zero-pinned boundary alternates between the two endpoints") {
  auto spec = make_problem("poisson1d");
  Rng rng = Rng(5).stream("batch", 0);
  Batch b = sample_batch(spec, rng, 50, 8, 0);
  CHECK(b.bc_outputs == std::vector<int>{0});
  for (int i = 0; i < 8; ++i) {
    CHECK(b.bc_points(i, 0) == (i % 2 == 0 ? -1.0 : 1.0));
    CHECK(b.bc_values(i, 0) == 0.0);
  }
  CHECK(b.periodic.empty());
}

TEST_CASE("batch sampling requires interior points") {
  auto spec = make_problem("allen_cahn");
  Rng rng = Rng(1).stream("batch", 0);
  CHECK_THROWS_AS(sample_batch(spec, rng, 0, 4, 4), ConfigError);
}

}  // TEST_SUITE
