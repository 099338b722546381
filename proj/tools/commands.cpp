#include "commands.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <thread>

#include "scpinn/cavity.hpp"
#include "scpinn/errors.hpp"
#include "scpinn/netbatch.hpp"
#include "scpinn/spectral.hpp"

namespace scpinn {
namespace {

namespace fs = std::filesystem;

std::string fmt(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void prepare_run_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !force)
    throw ConfigError("output directory '" + dir.string() +
                      "' already exists; pass --force to reuse it");
  fs::create_directories(dir);
}

void prepare_out_file(const fs::path& file, bool force) {
  if (fs::exists(file) && !force)
    throw ConfigError("output file '" + file.string() +
                      "' already exists; pass --force to overwrite it");
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::vector<std::string> scored_names(const Network& net, const EvalTarget& target) {
  return {net.output_names().begin(),
          net.output_names().begin() + static_cast<std::ptrdiff_t>(target.values.cols())};
}

double final_rel_l2(const TrainResult& res) {
  if (res.metrics.empty() || res.metrics.back().rel_l2.empty())
    return std::numeric_limits<double>::quiet_NaN();
  const auto& r = res.metrics.back().rel_l2;
  double s = 0.0;
  for (double v : r) s += v;
  return s / static_cast<double>(r.size());
}

void log_metrics_row(const MetricsRow& r) {
  std::string line = "iter " + std::to_string(r.iter) + "  loss " + fmt(r.loss_total);
  if (!r.rel_l2.empty()) {
    line += "  rel_l2";
    for (double v : r.rel_l2) line += " " + fmt(v);
  }
  if (r.has_div) line += "  div_mse " + fmt(r.div_mse);
  line += "  t " + fmt(r.wall_time_s) + "s";
  std::fprintf(stderr, "%s\n", line.c_str());
}

void write_plot_export(const fs::path& path, const std::vector<MetricsRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IntegrityError("cannot write plot export: " + path.string());
  const bool scored = !rows.empty() && !rows.front().rel_l2.empty();
  f << "# wall_time_s " << (scored ? "rel_l2" : "loss_total") << "\n";
  for (const MetricsRow& r : rows) {
    double err = r.loss_total;
    if (scored) {
      err = 0.0;
      for (double v : r.rel_l2) err += v;
      err /= static_cast<double>(r.rel_l2.size());
    }
    f << fmt(r.wall_time_s) << ' ' << fmt(err) << "\n";
  }
}

/// Short-horizon self-convergence gate for a configured spectral run. The
/// ladder starts at the requested dt and halves twice; the measured order
/// must look fourth-ish, otherwise the step is too coarse for the problem.
void gate_spectral_ladder(const ProblemSpec& spec, const SpectralOptions& so, double T) {
  const long long K =
      std::min<long long>(64, static_cast<long long>(std::floor(T / so.dt + 1e-9)));
  if (K < 4) throw ConfigError("reference dt leaves fewer than 4 steps over the time domain");
  const double t_lad = static_cast<double>(K) * so.dt;
  ConvergenceLadder lad;
  try {
    lad = etdrk4_ladder(spec, so.n_modes, t_lad, so.dt, 3);
  } catch (const NumericError& e) {
    throw NumericError("reference dt=" + fmt(so.dt) +
                       " is too large: convergence ladder diverged (" + e.what() + ")");
  }
  std::fprintf(stderr, "convergence ladder over t in [0, %s]:\n", fmt(t_lad).c_str());
  for (std::size_t i = 0; i < lad.dts.size(); ++i)
    std::fprintf(stderr, "  dt %-12s rel err %s\n", fmt(lad.dts[i]).c_str(),
                 fmt(lad.errors[i]).c_str());
  double emax = 0.0;
  for (double e : lad.errors) emax = std::max(emax, e);
  if (emax < 1e-12) {
    std::fprintf(stderr, "  errors at roundoff floor; order not measurable, dt accepted\n");
    return;
  }
  std::fprintf(stderr, "  order estimate %.3f\n", lad.order);
  if (lad.order < 3.0)
    throw NumericError("reference dt=" + fmt(so.dt) +
                       " is too large: ladder order estimate " + fmt(lad.order) +
                       " (expected ~4)");
}

void log_cavity_ladder(const CavityOptions& co, const FieldGrid& fine) {
  if ((co.n - 1) % 2 != 0 || (co.n + 1) / 2 < 33) return;
  CavityOptions half = co;
  half.n = (co.n + 1) / 2;
  const FieldGrid gh = cavity_solve(half);
  // u along the vertical centerline, compared at the shared nodes.
  const long long nh = half.n, nf = co.n;
  double dmax = 0.0;
  for (long long j = 0; j < nh; ++j) {
    const double uh = gh.fields[0][(nh / 2) * nh + j];
    const double uf = fine.fields[0][(nf / 2) * nf + 2 * j];
    dmax = std::max(dmax, std::abs(uh - uf));
  }
  std::fprintf(stderr, "cavity grid ladder: centerline u max diff n=%lld vs n=%lld: %s\n", nh,
               nf, fmt(dmax).c_str());
}

struct AblationRun {
  std::string arm;
  std::uint64_t seed;
  bool aborted = false;
  double rel_l2 = std::numeric_limits<double>::quiet_NaN();
  double loss = std::numeric_limits<double>::quiet_NaN();
  double wall_s = 0.0;
};

}  // namespace

RunConfig resolve_config(const CliCommon& cli, const std::string& problem_override) {
  nlohmann::json j;
  if (cli.config_path.empty()) {
    j = config_to_json(RunConfig{});
  } else {
    std::ifstream f(cli.config_path);
    if (!f) throw ConfigError("cannot open config file: " + cli.config_path);
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file " + cli.config_path + " is not valid JSON: " + e.what());
    }
  }
  if (!problem_override.empty()) j["problem"]["name"] = problem_override;
  for (const std::string& s : cli.overrides) apply_override(j, s);
  RunConfig c = config_from_json(j);
  if (cli.seed >= 0) c.train.seed = static_cast<std::uint64_t>(cli.seed);
  if (!cli.out.empty()) c.out = cli.out;
  return c;
}

EvalTarget target_from_grid(const FieldGrid& g, const ProblemSpec& spec, const Network& net) {
  if (static_cast<int>(g.axes.size()) != spec.dim())
    throw IntegrityError("reference grid has " + std::to_string(g.axes.size()) +
                         " axes but the problem needs " + std::to_string(spec.dim()));
  for (int a = 0; a < spec.dim(); ++a)
    if (g.axes[static_cast<std::size_t>(a)].name != spec.axes[static_cast<std::size_t>(a)])
      throw IntegrityError("reference grid axis " + std::to_string(a) + " is '" +
                           g.axes[static_cast<std::size_t>(a)].name + "', expected '" +
                           spec.axes[static_cast<std::size_t>(a)] + "'");
  EvalTarget t;
  t.points = grid_points(g);
  t.values = grid_values(g);
  if (t.values.cols() > net.n_outputs())
    throw IntegrityError("reference grid carries more fields than the network has outputs");

  if (spec.kind == ProblemKind::Cavity) {
    const long long nx = g.axes[0].n, ny = g.axes[1].n;
    const Eigen::VectorXd cx = g.axis_coords(0), cy = g.axis_coords(1);
    t.div_points.resize((nx - 2) * (ny - 2), 2);
    Eigen::Index r = 0;
    for (long long i = 1; i < nx - 1; ++i)
      for (long long j = 1; j < ny - 1; ++j) {
        t.div_points(r, 0) = cx[i];
        t.div_points(r, 1) = cy[j];
        ++r;
      }
  }
  return t;
}

FieldGrid generate_reference(const RunConfig& c, const ProblemSpec& spec, bool log_ladder) {
  if (spec.kind == ProblemKind::Cavity) {
    CavityOptions co;
    co.Re = spec.coeff.at("Re");
    co.u_lid = spec.coeff.at("u_lid");
    co.n = c.reference.cavity_n;
    co.tol = c.reference.cavity_tol;
    FieldGrid g = cavity_solve(co);
    if (log_ladder) log_cavity_ladder(co, g);
    return g;
  }
  if (spec.kind == ProblemKind::Poisson1d) {
    // Closed-form solution; no solver needed.
    const int n = c.reference.out_n > 1 ? c.reference.out_n : 129;
    FieldGrid g;
    g.problem = spec.name;
    g.axes = {{spec.axes[0], n, spec.bounds[0].first, spec.bounds[0].second}};
    Eigen::VectorXd u(n);
    const Eigen::VectorXd x = g.axis_coords(0);
    for (int i = 0; i < n; ++i) u[i] = std::sin(M_PI * x[i]);
    g.fields.push_back(std::move(u));
    return g;
  }

  SpectralOptions so;
  so.n_modes = c.reference.n_modes;
  const int snaps = std::max(1, c.reference.snapshots);
  const double T = spec.bounds[static_cast<std::size_t>(spec.axis_t())].second;
  // Snap dt to an exact divisor of the snapshot spacing so snapshots land on
  // step boundaries.
  const double seg = snaps > 1 ? T / (snaps - 1) : T;
  const double per = std::ceil(seg / c.reference.dt - 1e-9);
  so.dt = seg / per;
  so.snapshot_times.resize(static_cast<std::size_t>(snaps));
  for (int s = 0; s < snaps; ++s)
    so.snapshot_times[static_cast<std::size_t>(s)] =
        snaps > 1 ? T * static_cast<double>(s) / (snaps - 1) : T;
  so.out_n = c.reference.out_n == -1 ? (spec.spatial_dims == 1 ? 129 : 65) : c.reference.out_n;
  if (log_ladder) gate_spectral_ladder(spec, so, T);
  return etdrk4_solve(spec, so);
}

int cmd_train(const CliCommon& cli, bool plot_export) {
  const RunConfig c = resolve_config(cli);
  const ProblemSpec spec = problem_from(c);
  const Network net(network_from(c, spec));
  const fs::path dir = c.out;
  prepare_run_dir(dir, cli.force);
  save_config((dir / "config.json").string(), c);

  std::optional<FieldGrid> grid;
  if (c.reference.source == "generate") {
    grid = generate_reference(c, spec, true);
    save_field((dir / "reference.grid").string(), *grid);
  } else if (c.reference.source != "none") {
    grid = load_field(c.reference.source);
  }
  std::optional<EvalTarget> target;
  if (grid) target = target_from_grid(*grid, spec, net);

  const TrainResult res = train(spec, net, c.train, target ? &*target : nullptr, log_metrics_row);

  const std::vector<std::string> names =
      target ? scored_names(net, *target) : std::vector<std::string>{};
  write_metrics_csv((dir / "metrics.csv").string(), res.metrics, names);
  save_checkpoint((dir / "checkpoint.bin").string(), net, res.params);
  if (plot_export) write_plot_export(dir / "error_vs_time.dat", res.metrics);

  if (res.aborted) {
    std::fprintf(stderr, "training aborted: %s\n", res.abort_reason.c_str());
    std::fprintf(stderr, "partial metrics written to %s\n", (dir / "metrics.csv").c_str());
    return 4;
  }
  if (!res.metrics.empty()) log_metrics_row(res.metrics.back());
  std::printf("run complete: %s\n", dir.c_str());
  return 0;
}

int cmd_ablate(const CliCommon& cli, int jobs) {
  if (jobs < 1) throw ConfigError("--jobs must be at least 1");
  const RunConfig c = resolve_config(cli);
  const ProblemSpec spec = problem_from(c);
  const Network net(network_from(c, spec));
  const fs::path dir = c.out;
  prepare_run_dir(dir, cli.force);
  save_config((dir / "config.json").string(), c);

  std::optional<FieldGrid> grid;
  if (c.reference.source == "generate") {
    grid = generate_reference(c, spec, true);
    save_field((dir / "reference.grid").string(), *grid);
  } else if (c.reference.source != "none") {
    grid = load_field(c.reference.source);
  }
  std::optional<EvalTarget> target;
  if (grid) target = target_from_grid(*grid, spec, net);
  const std::vector<std::string> names =
      target ? scored_names(net, *target) : std::vector<std::string>{};

  constexpr int kTrials = 5;
  std::vector<AblationRun> runs;
  for (int r = 0; r < kTrials; ++r)
    for (bool corr : {true, false})
      runs.push_back({corr ? "scale" : "baseline", c.train.seed + static_cast<std::uint64_t>(r)});

  auto do_run = [&](AblationRun& run) {
    RunConfig rc = c;
    rc.train.seed = run.seed;
    rc.train.correction.enabled = run.arm == "scale";
    const fs::path rdir = dir / (run.arm + "_seed" + std::to_string(run.seed));
    fs::create_directories(rdir);
    save_config((rdir / "config.json").string(), rc);
    const TrainResult res = train(spec, net, rc.train, target ? &*target : nullptr);
    write_metrics_csv((rdir / "metrics.csv").string(), res.metrics, names);
    save_checkpoint((rdir / "checkpoint.bin").string(), net, res.params);
    run.aborted = res.aborted;
    run.rel_l2 = final_rel_l2(res);
    if (!res.metrics.empty()) {
      run.loss = res.metrics.back().loss_total;
      run.wall_s = res.metrics.back().wall_time_s;
    }
    std::fprintf(stderr, "[%s seed %llu] done: rel_l2 %s loss %s (%.1fs)%s\n", run.arm.c_str(),
                 static_cast<unsigned long long>(run.seed), fmt(run.rel_l2).c_str(),
                 fmt(run.loss).c_str(), run.wall_s, run.aborted ? " ABORTED" : "");
  };

  if (jobs == 1) {
    for (AblationRun& run : runs) do_run(run);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= runs.size()) return;
        do_run(runs[i]);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::ofstream sf(dir / "summary.csv", std::ios::trunc);
  if (!sf) throw IntegrityError("cannot write ablation summary");
  sf << "arm,seed,final_rel_l2,final_loss,wall_time_s,aborted\n";
  for (const AblationRun& r : runs)
    sf << r.arm << ',' << r.seed << ',' << fmt(r.rel_l2) << ',' << fmt(r.loss) << ','
       << fmt(r.wall_s) << ',' << (r.aborted ? 1 : 0) << "\n";
  sf.close();

  for (const char* arm : {"scale", "baseline"}) {
    double best = std::numeric_limits<double>::infinity(), sum = 0.0, wall = 0.0;
    int cnt = 0;
    for (const AblationRun& r : runs)
      if (r.arm == arm && std::isfinite(r.rel_l2)) {
        best = std::min(best, r.rel_l2);
        sum += r.rel_l2;
        wall += r.wall_s;
        ++cnt;
      }
    std::printf("%-9s runs %d  best rel_l2 %s  avg rel_l2 %s  wall %.1fs\n", arm, cnt,
                fmt(best).c_str(), fmt(cnt ? sum / cnt : best).c_str(), wall);
  }
  bool any_abort = false;
  for (const AblationRun& r : runs) any_abort = any_abort || r.aborted;
  return any_abort ? 4 : 0;
}

int cmd_reference(const CliCommon& cli, const std::string& problem) {
  const RunConfig c = resolve_config(cli, problem);
  const ProblemSpec spec = problem_from(c);
  const fs::path out = cli.out.empty() ? fs::path(spec.name + ".grid") : fs::path(cli.out);
  prepare_out_file(out, cli.force);
  const FieldGrid g = generate_reference(c, spec, true);
  save_field(out.string(), g);
  std::string shape;
  for (const GridAxis& a : g.axes) shape += " " + a.name + "(" + std::to_string(a.n) + ")";
  std::printf("wrote %s:%s, %zu field(s)\n", out.c_str(), shape.c_str(), g.fields.size());
  return 0;
}

int cmd_eval(const CliCommon& cli, const std::string& checkpoint_path,
             const std::string& reference_path, const std::string& export_path) {
  const RunConfig c = resolve_config(cli);
  const ProblemSpec spec = problem_from(c);
  const Network net(network_from(c, spec));
  const Eigen::VectorXd params = load_checkpoint(checkpoint_path, net);
  const FieldGrid grid = load_field(reference_path);
  const EvalTarget target = target_from_grid(grid, spec, net);

  const NetBatch engine(net);
  MetricsRow row = evaluate(spec, net, engine, params, target);
  const std::vector<std::string> names = scored_names(net, target);
  for (std::size_t o = 0; o < names.size(); ++o)
    std::printf("rel_l2_%s %s\nmse_%s %s\n", names[o].c_str(), fmt(row.rel_l2[o]).c_str(),
                names[o].c_str(), fmt(row.mse[o]).c_str());
  if (row.has_div) std::printf("div_mse %s\n", fmt(row.div_mse).c_str());

  if (!cli.out.empty()) {
    prepare_out_file(cli.out, cli.force);
    write_metrics_csv(cli.out, {row}, names);
  }

  if (!export_path.empty()) {
    prepare_out_file(export_path, cli.force);
    FieldGrid pred;
    pred.problem = grid.problem;
    pred.axes = grid.axes;
    const Eigen::Index n = target.points.rows();
    for (int o = 0; o < net.n_outputs(); ++o)
      pred.fields.emplace_back(Eigen::VectorXd::Zero(n));
    DerivReq vreq;
    vreq.axis_order.assign(static_cast<std::size_t>(spec.dim()), 0);
    NetBatch::Workspace ws;
    constexpr Eigen::Index kChunk = 16384;
    for (Eigen::Index start = 0; start < n; start += kChunk) {
      const Eigen::Index m = std::min(kChunk, n - start);
      NetBatch::Outputs out =
          engine.forward(params, target.points.middleRows(start, m), vreq, ws, false);
      for (int o = 0; o < net.n_outputs(); ++o)
        pred.fields[static_cast<std::size_t>(o)].segment(start, m) =
            out.val[static_cast<std::size_t>(o)][0].matrix();
    }
    save_field(export_path, pred);
    std::printf("exported prediction to %s\n", export_path.c_str());
  }
  return 0;
}

}  // namespace scpinn
