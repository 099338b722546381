#include "scpinn/problems.hpp"

#include <cmath>
#include <set>

namespace scpinn {
namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

DerivReq ProblemSpec::residual_req() const {
  DerivReq r;
  switch (kind) {
    case ProblemKind::AllenCahn: r.axis_order = {2, 1}; break;
    case ProblemKind::KdV: r.axis_order = {3, 1}; break;
    case ProblemKind::KuramotoSivashinsky: r.axis_order = {4, 1}; break;
    case ProblemKind::GrayScott: r.axis_order = {2, 2, 1}; break;
    case ProblemKind::Cavity: r.axis_order = {2, 2}; break;
    case ProblemKind::Poisson1d: r.axis_order = {2}; break;
  }
  return r;
}

DerivReq ProblemSpec::snapshot_req() const {
  // Values always; spatial second derivatives wherever a correction carries
  // the Laplacian. Time derivatives of the snapshot are never needed.
  DerivReq r;
  r.axis_order.assign(static_cast<std::size_t>(dim()), 0);
  bool any_lap = false;
  for (auto [o, with_lap] : corr_map) any_lap = any_lap || with_lap;
  if (any_lap)
    for (int a = 0; a < spatial_dims; ++a) r.axis_order[static_cast<std::size_t>(a)] = 2;
  return r;
}

double ProblemSpec::ic(int out, std::span<const double> xy) const {
  const double x = xy[0];
  switch (kind) {
    case ProblemKind::AllenCahn: return x * x * std::cos(kPi * x);
    case ProblemKind::KdV: return std::cos(kPi * x);
    case ProblemKind::KuramotoSivashinsky: return std::cos(x) * (1.0 + std::sin(x));
    case ProblemKind::GrayScott: {
      const double y = xy[1];
      if (out == 0) {
        const double dx = x + 0.05, dy = y + 0.02;
        return 1.0 - std::exp(-10.0 * (dx * dx + dy * dy));
      }
      const double dx = x - 0.05, dy = y - 0.02;
      return std::exp(-10.0 * (dx * dx + dy * dy));
    }
    case ProblemKind::Cavity:
    case ProblemKind::Poisson1d: break;
  }
  throw ConfigError("ic() called on a steady problem");
}

ProblemSpec make_problem(const std::string& name,
                         const std::map<std::string, double>& overrides) {
  ProblemSpec s;
  s.name = name;
  std::set<std::string> allowed = {"t_end"};

  if (name == "allen_cahn") {
    s.kind = ProblemKind::AllenCahn;
    s.axes = {"x", "t"};
    s.bounds = {{-1.0, 1.0}, {0.0, 1.0}};
    s.coeff = {{"alpha", 1e-4}, {"delta", 5.0}};
    s.outputs = {"u"};
    s.corr_map = {{0, true}};
    allowed.insert({"alpha", "delta", "gamma_u"});
  } else if (name == "kdv") {
    s.kind = ProblemKind::KdV;
    s.axes = {"x", "t"};
    s.bounds = {{-1.0, 1.0}, {0.0, 1.0}};
    s.coeff = {{"nu", 0.022 * 0.022}};
    s.outputs = {"u"};
    s.corr_map = {{0, true}};
    allowed.insert({"nu", "gamma_u"});
  } else if (name == "ks") {
    s.kind = ProblemKind::KuramotoSivashinsky;
    s.axes = {"x", "t"};
    s.bounds = {{0.0, 2.0 * kPi}, {0.0, 0.4}};
    s.coeff = {{"a1", 100.0 / 16.0}, {"a2", 100.0 / 256.0}, {"a3", 100.0 / 256.0}};
    s.outputs = {"u"};
    s.corr_map = {{0, true}};
    allowed.insert({"a1", "a2", "a3", "gamma_u"});
  } else if (name == "gray_scott") {
    s.kind = ProblemKind::GrayScott;
    s.axes = {"x", "y", "t"};
    s.spatial_dims = 2;
    s.bounds = {{-1.0, 1.0}, {-1.0, 1.0}, {0.0, 0.5}};
    s.coeff = {{"eps1", 0.2}, {"eps2", 0.1}, {"b1", 40.0},
               {"b2", 100.0}, {"c1", 1000.0}, {"c2", 1000.0}};
    s.outputs = {"u", "v"};
    s.n_equations = 2;
    s.corr_map = {{0, true}, {1, true}};
    allowed.insert({"eps1", "eps2", "b1", "b2", "c1", "c2", "gamma_u", "gamma_v"});
  } else if (name == "cavity") {
    s.kind = ProblemKind::Cavity;
    s.axes = {"x", "y"};
    s.spatial_dims = 2;
    s.time_dependent = false;
    s.bounds = {{0.0, 1.0}, {0.0, 1.0}};
    s.coeff = {{"Re", 400.0}, {"u_lid", 1.0}};
    s.outputs = {"u", "v", "p"};
    s.n_equations = 3;
    s.bc = BcKind::CavityWalls;
    // momentum corrections smooth velocity increments; the continuity
    // correction takes pressure increments with no Laplacian.
    s.corr_map = {{0, true}, {1, true}, {2, false}};
    allowed = {"Re", "u_lid", "gamma_u", "gamma_v", "gamma_p"};
  } else if (name == "poisson1d") {
    // -u'' = pi^2 sin(pi x) on [-1, 1], u(+-1) = 0, solution sin(pi x).
    // Exists to exercise the trainer on a problem with a closed form.
    s.kind = ProblemKind::Poisson1d;
    s.axes = {"x"};
    s.time_dependent = false;
    s.bounds = {{-1.0, 1.0}};
    s.outputs = {"u"};
    s.bc = BcKind::DirichletZero;
    s.corr_map = {{0, true}};
    allowed = {"gamma_u"};
  } else {
    throw ConfigError("unknown problem: " + name);
  }

  for (const auto& [k, v] : overrides) {
    require(allowed.count(k) > 0, "problem " + name + ": unknown override " + k);
    if (k == "t_end") {
      require(s.time_dependent, name + " has no time axis");
      require(v > 0.0, "t_end must be positive");
      s.bounds.back().second = v;
    } else if (!k.starts_with("gamma_")) {
      s.coeff[k] = v;
    }
  }

  // Positivity where the operators require it.
  auto pos = [&](const char* k) {
    if (s.coeff.count(k)) require(s.coeff[k] > 0.0, name + ": " + k + " must be positive");
  };
  auto nonneg = [&](const char* k) {
    if (s.coeff.count(k)) require(s.coeff[k] >= 0.0, name + ": " + k + " must be nonnegative");
  };
  pos("alpha");
  pos("nu");
  pos("a1");
  pos("a2");
  pos("a3");
  pos("eps1");
  pos("eps2");
  pos("Re");
  nonneg("delta");
  nonneg("b1");
  nonneg("b2");
  nonneg("c1");
  nonneg("c2");

  // Default gammas: the problem's own diffusion scale per output.
  switch (s.kind) {
    case ProblemKind::AllenCahn: s.gamma = {s.coeff["alpha"]}; break;
    case ProblemKind::KdV: s.gamma = {std::sqrt(s.coeff["nu"])}; break;
    case ProblemKind::KuramotoSivashinsky: s.gamma = {s.coeff["a2"]}; break;
    case ProblemKind::GrayScott: s.gamma = {s.coeff["eps1"], s.coeff["eps2"]}; break;
    case ProblemKind::Cavity:
      s.gamma = {1.0 / s.coeff["Re"], 1.0 / s.coeff["Re"], 0.0};
      break;
    case ProblemKind::Poisson1d: s.gamma = {1.0}; break;
  }
  for (std::size_t o = 0; o < s.outputs.size(); ++o) {
    auto it = overrides.find("gamma_" + s.outputs[o]);
    if (it != overrides.end()) {
      require(it->second >= 0.0, "gamma must be nonnegative");
      s.gamma[o] = it->second;
    }
  }
  return s;
}

void apply_problem_axes(const ProblemSpec& spec, NetworkConfig& net_cfg) {
  net_cfg.inputs = spec.axes;
  net_cfg.input_range = spec.bounds;
}

Eigen::MatrixXd residual_source(const ProblemSpec& spec, const Eigen::MatrixXd& points) {
  if (spec.kind != ProblemKind::Poisson1d)
    return Eigen::MatrixXd::Zero(points.rows(), 0);
  Eigen::MatrixXd src(points.rows(), 1);
  src.col(0) = (kPi * points.col(0).array()).sin() * (kPi * kPi);
  return src;
}

Batch sample_batch(const ProblemSpec& spec, Rng& rng, int n_interior, int n_bc, int n_ic) {
  require(n_interior > 0, "sample_batch: n_interior must be positive");
  const int d = spec.dim();
  Batch b;

  // Interior: uniform over the spatial cube; time in (0, T].
  b.interior.resize(n_interior, d);
  for (int i = 0; i < n_interior; ++i) {
    for (int a = 0; a < spec.spatial_dims; ++a)
      b.interior(i, a) = rng.uniform(spec.bounds[static_cast<std::size_t>(a)].first,
                                     spec.bounds[static_cast<std::size_t>(a)].second);
    if (spec.time_dependent) {
      const double t_end = spec.bounds.back().second;
      b.interior(i, spec.axis_t()) = t_end * (1.0 - rng.uniform01());
    }
  }

  if (n_bc > 0) {
    switch (spec.bc) {
      case BcKind::Periodic: {
        // Split between spatial axes; each pair shares its free coordinates.
        const int per_axis = n_bc / spec.spatial_dims;
        for (int a = 0; a < spec.spatial_dims; ++a) {
          const int m = a == 0 ? n_bc - per_axis * (spec.spatial_dims - 1) : per_axis;
          PeriodicPairs pp;
          pp.axis = a;
          pp.lo.resize(m, d);
          pp.hi.resize(m, d);
          for (int i = 0; i < m; ++i) {
            for (int j = 0; j < spec.spatial_dims; ++j) {
              const double v = rng.uniform(spec.bounds[static_cast<std::size_t>(j)].first,
                                           spec.bounds[static_cast<std::size_t>(j)].second);
              pp.lo(i, j) = v;
              pp.hi(i, j) = v;
            }
            if (spec.time_dependent) {
              const double t = spec.bounds.back().second * (1.0 - rng.uniform01());
              pp.lo(i, spec.axis_t()) = t;
              pp.hi(i, spec.axis_t()) = t;
            }
            pp.lo(i, a) = spec.bounds[static_cast<std::size_t>(a)].first;
            pp.hi(i, a) = spec.bounds[static_cast<std::size_t>(a)].second;
          }
          b.periodic.push_back(std::move(pp));
        }
        break;
      }
      case BcKind::CavityWalls: {
        // Equal counts per face; the lid constrains (u, v) = (u_lid, 0) and
        // the three fixed walls pin both velocities to zero. Pressure is
        // never constrained on the boundary.
        b.bc_outputs = {0, 1};
        b.bc_points.resize(n_bc, d);
        b.bc_values.setZero(n_bc, 2);
        const double u_lid = spec.coeff.at("u_lid");
        const int base = n_bc / 4, extra = n_bc % 4;
        int row = 0;
        for (int face = 0; face < 4; ++face) {
          const int m = base + (face < extra ? 1 : 0);
          for (int i = 0; i < m; ++i, ++row) {
            const double r = rng.uniform01();
            switch (face) {
              case 0:  // lid y = 1
                b.bc_points(row, 0) = r;
                b.bc_points(row, 1) = 1.0;
                b.bc_values(row, 0) = u_lid;
                break;
              case 1:  // x = 0
                b.bc_points(row, 0) = 0.0;
                b.bc_points(row, 1) = r;
                break;
              case 2:  // x = 1
                b.bc_points(row, 0) = 1.0;
                b.bc_points(row, 1) = r;
                break;
              case 3:  // y = 0
                b.bc_points(row, 0) = r;
                b.bc_points(row, 1) = 0.0;
                break;
            }
          }
        }
        break;
      }
      case BcKind::DirichletZero: {
        b.bc_outputs = {0};
        b.bc_points.resize(n_bc, d);
        b.bc_values.setZero(n_bc, 1);
        for (int i = 0; i < n_bc; ++i)
          b.bc_points(i, 0) = (i % 2 == 0) ? spec.bounds[0].first : spec.bounds[0].second;
        break;
      }
    }
  }

  if (spec.time_dependent && n_ic > 0) {
    b.ic_points.resize(n_ic, d);
    b.ic_values.resize(n_ic, static_cast<Eigen::Index>(spec.outputs.size()));
    for (int i = 0; i < n_ic; ++i) {
      std::array<double, 2> xy{};
      for (int a = 0; a < spec.spatial_dims; ++a) {
        xy[static_cast<std::size_t>(a)] =
            rng.uniform(spec.bounds[static_cast<std::size_t>(a)].first,
                        spec.bounds[static_cast<std::size_t>(a)].second);
        b.ic_points(i, a) = xy[static_cast<std::size_t>(a)];
      }
      b.ic_points(i, spec.axis_t()) = 0.0;
      for (std::size_t o = 0; o < spec.outputs.size(); ++o)
        b.ic_values(i, static_cast<Eigen::Index>(o)) =
            spec.ic(static_cast<int>(o), std::span<const double>(xy.data(), 2));
    }
  }
  return b;
}

}  // namespace scpinn
