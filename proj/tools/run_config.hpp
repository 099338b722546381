#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "scpinn/network.hpp"
#include "scpinn/problems.hpp"
#include "scpinn/trainer.hpp"

namespace scpinn {

/// Reference-solution handling for a run: none, a grid file on disk, or
/// generated on the fly by the matching oracle.
struct ReferenceConfig {
  std::string source = "none";  // "none", "generate", or a grid file path
  int n_modes = 256;            // spectral collocation points per axis
  double dt = 1e-4;
  int snapshots = 33;
  int out_n = -1;  // -1 picks a plotting-friendly closed grid; 0 keeps the
                   // oracle's collocation grid
  int cavity_n = 129;
  double cavity_tol = 1e-8;

  friend bool operator==(const ReferenceConfig&, const ReferenceConfig&) = default;
};

/// One complete run description; serializes to a single JSON document and
/// back with exact equality.
struct RunConfig {
  std::string problem = "allen_cahn";
  std::map<std::string, double> coeff;

  std::vector<int> trunk{128, 128, 128, 128};
  bool skip_concat = false;
  std::vector<BranchSpec> branches;
  std::string activation = "silu";
  double frequency = 2.0;

  TrainConfig train;
  std::string out = "runs/run";
  ReferenceConfig reference;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);

RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& c);

/// Applies one dotted-path override of the form "a.b.c=value" to the raw
/// JSON document; the value is parsed as JSON when possible, else taken as
/// a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

ProblemSpec problem_from(const RunConfig& c);
NetworkConfig network_from(const RunConfig& c, const ProblemSpec& spec);

}  // namespace scpinn
