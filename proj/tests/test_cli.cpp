#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "run_config.hpp"
#include "scpinn/errors.hpp"

using namespace scpinn;

namespace {

namespace fs = std::filesystem;

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "scpinn_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

// The wall-time column is the one field that legitimately differs between
// repeated runs.
std::string drop_wall_time(const std::string& line) {
  std::vector<std::string> cells = split(line);
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i == 1) continue;
    if (!out.empty()) out += ',';
    out += cells[i];
  }
  return out;
}

std::vector<std::string> base_train_overrides() {
  return {"problem.name=poisson1d", "network.trunk=[16,16]",  "network.activation=sin",
          "train.iterations=300",   "train.batch_interior=64", "train.eval_every=0",
          "train.lr=3e-3",          "train.weights.bc=10",     "train.seed=3",
          "reference.source=generate", "reference.out_n=65"};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config resolution layers file, overrides, then flags") {
  const fs::path cfg = work_dir() / "resolve.json";
  {
    RunConfig base;
    base.problem = "kdv";
    base.train.lr = 0.002;
    base.train.seed = 11;
    save_config(cfg.string(), base);
  }
  CliCommon cli;
  cli.config_path = cfg.string();
  cli.overrides = {"train.lr=0.01", "problem.coeff.nu=0.1"};
  cli.seed = 7;
  cli.out = "runs/elsewhere";
  RunConfig c = resolve_config(cli);
  CHECK(c.problem == "kdv");
  CHECK(c.train.lr == 0.01);
  CHECK(c.coeff.at("nu") == 0.1);
  CHECK(c.train.seed == 7);
  CHECK(c.out == "runs/elsewhere");

  // Flags left at their defaults keep the file's values.
  CliCommon plain;
  plain.config_path = cfg.string();
  RunConfig p = resolve_config(plain);
  CHECK(p.train.lr == 0.002);
  CHECK(p.train.seed == 11);
  CHECK(p.out == RunConfig{}.out);

  // The problem override slots in before --set overrides.
  CHECK(resolve_config(plain, "ks").problem == "ks");

  CliCommon empty;
  CHECK(resolve_config(empty) == RunConfig{});

  CliCommon missing;
  missing.config_path = (work_dir() / "no_such.json").string();
  CHECK_THROWS_WITH_AS(resolve_config(missing), doctest::Contains("cannot open config file"),
                       ConfigError);
}

TEST_CASE("scoring targets validate the grid against the problem") {
  RunConfig c;
  c.problem = "poisson1d";
  c.trunk = {8, 8};
  ProblemSpec spec = problem_from(c);
  Network net(network_from(c, spec));

  FieldGrid g = generate_reference(c, spec, false);
  EvalTarget t = target_from_grid(g, spec, net);
  CHECK(t.points.rows() == 129);
  CHECK(t.points.cols() == 1);
  CHECK(t.values.rows() == 129);
  CHECK(t.values.cols() == 1);
  CHECK(t.div_points.rows() == 0);

  FieldGrid renamed = g;
  renamed.axes[0].name = "y";
  CHECK_THROWS_WITH_AS(target_from_grid(renamed, spec, net),
                       doctest::Contains("axis 0 is 'y', expected 'x'"), IntegrityError);

  FieldGrid extra = g;
  extra.fields.push_back(g.fields[0]);
  CHECK_THROWS_WITH_AS(target_from_grid(extra, spec, net),
                       doctest::Contains("more fields than the network has outputs"),
                       IntegrityError);

  RunConfig ac;
  ac.problem = "allen_cahn";
  ProblemSpec ac_spec = problem_from(ac);
  Network ac_net(network_from(ac, ac_spec));
  CHECK_THROWS_WITH_AS(target_from_grid(g, ac_spec, ac_net),
                       doctest::Contains("has 1 axes but the problem needs 2"), IntegrityError);

  // Cavity grids add interior divergence probes.
  RunConfig cc;
  cc.problem = "cavity";
  cc.reference.cavity_n = 33;
  cc.reference.cavity_tol = 1e-6;
  ProblemSpec cav = problem_from(cc);
  Network cav_net(network_from(cc, cav));
  FieldGrid cg = generate_reference(cc, cav, false);
  EvalTarget ct = target_from_grid(cg, cav, cav_net);
  CHECK(ct.div_points.rows() == 31 * 31);
  CHECK(ct.div_points.cols() == 2);
  CHECK(ct.values.cols() == 2);
}

TEST_CASE("reference generation snaps steps and honors the output grid") {
  RunConfig c;
  c.problem = "poisson1d";
  ProblemSpec spec = problem_from(c);
  FieldGrid g = generate_reference(c, spec, false);
  REQUIRE(g.axes.size() == 1);
  CHECK(g.axes[0].n == 129);
  CHECK(g.axes[0].lo == -1.0);
  CHECK(g.axes[0].hi == 1.0);
  const Eigen::VectorXd x = g.axis_coords(0);
  for (int i = 0; i < 129; ++i) CHECK(g.fields[0][i] == std::sin(M_PI * x[i]));

  c.reference.out_n = 65;
  CHECK(generate_reference(c, spec, false).axes[0].n == 65);

  RunConfig a;
  a.problem = "allen_cahn";
  a.reference.n_modes = 16;
  a.reference.dt = 0.01;
  a.reference.snapshots = 3;
  ProblemSpec ac = problem_from(a);
  FieldGrid ga = generate_reference(a, ac, false);
  REQUIRE(ga.axes.size() == 2);
  CHECK(ga.axes[0].n == 129);  // 1-D runs default to a closed plotting grid
  CHECK(ga.axes[0].hi == 1.0);
  CHECK(ga.axes[1].n == 3);
  CHECK(ga.axes[1].lo == 0.0);
  CHECK(ga.axes[1].hi == 1.0);

  a.reference.out_n = 0;
  FieldGrid gc = generate_reference(a, ac, false);
  CHECK(gc.axes[0].n == 16);
  CHECK(gc.axes[0].hi == -1.0 + 15.0 * 2.0 / 16.0);
}

TEST_CASE("reference gating rejects steps the ladder cannot certify") {
  RunConfig c;
  c.problem = "kdv";
  c.reference.n_modes = 64;
  c.reference.snapshots = 2;
  ProblemSpec spec = problem_from(c);

  c.reference.dt = 0.1;
  CHECK_THROWS_WITH_AS(generate_reference(c, spec, true), doctest::Contains("is too large"),
                       NumericError);

  c.reference.dt = 0.5;
  CHECK_THROWS_WITH_AS(generate_reference(c, spec, true),
                       "reference dt leaves fewer than 4 steps over the time domain",
                       ConfigError);

  // A sane step passes the same gate.
  c.reference.dt = 0.002;
  c.reference.out_n = 0;
  FieldGrid g = generate_reference(c, spec, true);
  CHECK(g.fields[0].allFinite());
}

TEST_CASE("train writes a complete, reproducible run directory") {
  const fs::path run1 = work_dir() / "train_run1";
  CliCommon cli;
  cli.overrides = base_train_overrides();
  cli.out = run1.string();
  REQUIRE(cmd_train(cli, true) == 0);

  for (const char* f : {"config.json", "reference.grid", "metrics.csv", "checkpoint.bin",
                        "error_vs_time.dat"})
    CHECK(fs::exists(run1 / f));

  RunConfig saved = load_config((run1 / "config.json").string());
  CHECK(saved.problem == "poisson1d");
  CHECK(saved.train.iterations == 300);
  CHECK(saved.out == run1.string());

  auto metrics = read_lines(run1 / "metrics.csv");
  REQUIRE(metrics.size() == 2);
  CHECK(metrics[0] ==
        "iter,wall_time_s,loss_total,loss_pde,loss_ic,loss_bc,rel_l2_u,mse_u");
  CHECK(split(metrics[1])[0] == "300");

  auto plot = read_lines(run1 / "error_vs_time.dat");
  REQUIRE(plot.size() == 2);
  CHECK(plot[0] == "# wall_time_s rel_l2");

  // Same configuration, fresh directory: everything but wall time repeats.
  const fs::path run2 = work_dir() / "train_run2";
  cli.out = run2.string();
  REQUIRE(cmd_train(cli, false) == 0);
  auto metrics2 = read_lines(run2 / "metrics.csv");
  REQUIRE(metrics2.size() == metrics.size());
  CHECK(metrics2[0] == metrics[0]);
  CHECK(drop_wall_time(metrics2[1]) == drop_wall_time(metrics[1]));

  // Occupied directories need --force.
  CHECK_THROWS_WITH_AS(cmd_train(cli, false), doctest::Contains("pass --force"), ConfigError);
  cli.force = true;
  REQUIRE(cmd_train(cli, false) == 0);

  // Scoring the checkpoint reproduces the final metrics row.
  CliCommon ecli;
  ecli.config_path = (run1 / "config.json").string();
  ecli.out = (work_dir() / "eval.csv").string();
  REQUIRE(cmd_eval(ecli, (run1 / "checkpoint.bin").string(),
                   (run1 / "reference.grid").string(),
                   (work_dir() / "pred.grid").string()) == 0);
  auto eval_rows = read_lines(work_dir() / "eval.csv");
  REQUIRE(eval_rows.size() == 2);
  const auto train_cells = split(metrics[1]);
  const auto eval_cells = split(eval_rows[1]);
  REQUIRE(train_cells.size() == 8);
  REQUIRE(eval_cells.size() == 8);
  CHECK(eval_cells[6] == train_cells[6]);  // rel_l2_u
  CHECK(eval_cells[7] == train_cells[7]);  // mse_u

  FieldGrid pred = load_field((work_dir() / "pred.grid").string());
  CHECK(pred.problem == "poisson1d");
  REQUIRE(pred.axes.size() == 1);
  CHECK(pred.axes[0].n == 65);
  REQUIRE(pred.fields.size() == 1);
  CHECK(pred.fields[0].allFinite());

  // A checkpoint only loads into the architecture that wrote it.
  CliCommon bad = ecli;
  bad.overrides = {"network.trunk=[8,8]"};
  bad.out.clear();
  CHECK_THROWS_WITH_AS(cmd_eval(bad, (run1 / "checkpoint.bin").string(),
                                (run1 / "reference.grid").string(), ""),
                       doctest::Contains("architecture hash mismatch"), IntegrityError);

  // A training run can score against a grid file instead of regenerating.
  const fs::path run3 = work_dir() / "train_run3";
  CliCommon file_cli;
  file_cli.overrides = base_train_overrides();
  file_cli.overrides.back() = "reference.out_n=-1";
  for (std::string& s : file_cli.overrides)
    if (s == "reference.source=generate")
      s = "reference.source=" + (run1 / "reference.grid").string();
  for (std::string& s : file_cli.overrides)
    if (s == "train.iterations=300") s = "train.iterations=50";
  file_cli.out = run3.string();
  REQUIRE(cmd_train(file_cli, false) == 0);
  auto metrics3 = read_lines(run3 / "metrics.csv");
  CHECK(metrics3[0] == metrics[0]);
  CHECK_FALSE(fs::exists(run3 / "reference.grid"));
}

TEST_CASE("a run that explodes aborts with a partial record") {
  const fs::path run = work_dir() / "train_explodes";
  CliCommon cli;
  cli.overrides = base_train_overrides();
  for (std::string& s : cli.overrides)
    if (s == "train.lr=3e-3") s = "train.lr=1e200";
  cli.out = run.string();
  CHECK(cmd_train(cli, false) == 4);
  CHECK(fs::exists(run / "metrics.csv"));
  CHECK(fs::exists(run / "checkpoint.bin"));
}

TEST_CASE("the reference command writes a loadable grid file") {
  const fs::path out = work_dir() / "poisson_ref.grid";
  CliCommon cli;
  cli.out = out.string();
  REQUIRE(cmd_reference(cli, "poisson1d") == 0);
  FieldGrid g = load_field(out.string());
  CHECK(g.problem == "poisson1d");
  CHECK(g.axes[0].n == 129);

  CHECK_THROWS_WITH_AS(cmd_reference(cli, "poisson1d"), doctest::Contains("pass --force"),
                       ConfigError);
  cli.force = true;
  REQUIRE(cmd_reference(cli, "poisson1d") == 0);
}

TEST_CASE("the ablation sweep writes per-arm runs and a summary") {
  const fs::path dir = work_dir() / "ablate";
  CliCommon cli;
  cli.overrides = base_train_overrides();
  for (std::string& s : cli.overrides) {
    if (s == "train.iterations=300") s = "train.iterations=40";
    if (s == "train.batch_interior=64") s = "train.batch_interior=32";
    if (s == "network.trunk=[16,16]") s = "network.trunk=[8,8]";
    if (s == "reference.out_n=65") s = "reference.out_n=33";
  }
  cli.out = dir.string();
  REQUIRE(cmd_ablate(cli, 1) == 0);

  auto summary = read_lines(dir / "summary.csv");
  REQUIRE(summary.size() == 11);
  CHECK(summary[0] == "arm,seed,final_rel_l2,final_loss,wall_time_s,aborted");
  int scale_rows = 0, base_rows = 0;
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto cells = split(summary[i]);
    REQUIRE(cells.size() == 6);
    if (cells[0] == "scale") ++scale_rows;
    if (cells[0] == "baseline") ++base_rows;
    CHECK(cells[5] == "0");
  }
  CHECK(scale_rows == 5);
  CHECK(base_rows == 5);

  for (int s = 3; s <= 7; ++s) {
    for (const char* arm : {"scale", "baseline"}) {
      const fs::path rdir = dir / (std::string(arm) + "_seed" + std::to_string(s));
      CAPTURE(rdir.string());
      for (const char* f : {"config.json", "metrics.csv", "checkpoint.bin"})
        CHECK(fs::exists(rdir / f));
      RunConfig rc = load_config((rdir / "config.json").string());
      CHECK(rc.train.seed == static_cast<std::uint64_t>(s));
      CHECK(rc.train.correction.enabled == (std::string(arm) == "scale"));
    }
  }

  CHECK_THROWS_WITH_AS(cmd_ablate(cli, 0), "--jobs must be at least 1", ConfigError);
}

}  // TEST_SUITE
