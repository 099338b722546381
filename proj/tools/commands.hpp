#pragma once

#include <string>
#include <vector>

#include "run_config.hpp"
#include "scpinn/fieldgrid.hpp"
#include "scpinn/trainer.hpp"

namespace scpinn {

/// Flags shared by every subcommand.
struct CliCommon {
  std::string config_path;             // empty starts from built-in defaults
  std::vector<std::string> overrides;  // repeated --set key.path=value
  std::string out;                     // overrides the config's output location
  long long seed = -1;                 // overrides train.seed when nonnegative
  bool force = false;
};

int cmd_train(const CliCommon& cli, bool plot_export);
int cmd_ablate(const CliCommon& cli, int jobs);
int cmd_reference(const CliCommon& cli, const std::string& problem);
int cmd_eval(const CliCommon& cli, const std::string& checkpoint_path,
             const std::string& reference_path, const std::string& export_path);

/// Config assembly shared with the tests: file (or defaults), then --set
/// overrides, then CLI flag overrides.
RunConfig resolve_config(const CliCommon& cli, const std::string& problem_override = "");

/// Builds the trainer's scoring target from a reference grid; validates the
/// axes against the problem. Cavity grids also produce interior divergence
/// points.
EvalTarget target_from_grid(const FieldGrid& g, const ProblemSpec& spec, const Network& net);

/// Runs the oracle matching the problem (spectral, cavity, or closed form)
/// with the config's reference options; optionally logs convergence
/// diagnostics and gates on them.
FieldGrid generate_reference(const RunConfig& c, const ProblemSpec& spec, bool log_ladder);

}  // namespace scpinn
