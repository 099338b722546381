#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "scpinn/errors.hpp"

namespace {

void add_common(CLI::App* cmd, scpinn::CliCommon& c) {
  cmd->add_option("--config", c.config_path, "JSON config file (defaults apply when omitted)");
  cmd->add_option("--set", c.overrides, "override a config field, e.g. --set train.lr=5e-4")
      ->take_all();
  cmd->add_option("--seed", c.seed, "override train.seed");
  cmd->add_option("--out", c.out, "output directory or file");
  cmd->add_flag("--force", c.force, "allow writing over existing outputs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequential-correction PINN trainer"};
  app.require_subcommand(1);

  scpinn::CliCommon train_cli;
  bool plot_export = false;
  CLI::App* train = app.add_subcommand("train", "train one model and write a run directory");
  add_common(train, train_cli);
  train->add_flag("--plot-export", plot_export,
                  "also write error_vs_time.dat (gnuplot two-column)");

  scpinn::CliCommon ablate_cli;
  int jobs = 1;
  CLI::App* ablate =
      app.add_subcommand("ablate", "5 seeds x {correction on, off}, with a summary table");
  add_common(ablate, ablate_cli);
  ablate->add_option("--jobs", jobs, "run this many trainings concurrently");

  scpinn::CliCommon ref_cli;
  std::string ref_problem;
  CLI::App* ref = app.add_subcommand("reference", "compute a high-accuracy solution grid");
  add_common(ref, ref_cli);
  ref->add_option("--problem", ref_problem, "problem name (overrides the config)");

  scpinn::CliCommon eval_cli;
  std::string checkpoint, reference, export_path;
  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint against a reference grid");
  add_common(eval, eval_cli);
  eval->add_option("--checkpoint", checkpoint, "trained parameter file")->required();
  eval->add_option("--reference", reference, "solution grid to score against")->required();
  eval->add_option("--export", export_path, "also write the model prediction as a grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) return scpinn::cmd_train(train_cli, plot_export);
    if (ablate->parsed()) return scpinn::cmd_ablate(ablate_cli, jobs);
    if (ref->parsed()) return scpinn::cmd_reference(ref_cli, ref_problem);
    if (eval->parsed()) return scpinn::cmd_eval(eval_cli, checkpoint, reference, export_path);
  } catch (const scpinn::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const scpinn::IntegrityError& e) {
    std::fprintf(stderr, "integrity error: %s\n", e.what());
    return 3;
  } catch (const scpinn::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
