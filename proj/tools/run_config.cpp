#include "run_config.hpp"

#include <fstream>
#include <initializer_list>

#include "scpinn/activations.hpp"
#include "scpinn/errors.hpp"

namespace scpinn {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& why) {
  throw ConfigError("config field '" + path + "': " + why);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known) bad(path + "." + it.key(), "unknown field");
  }
}

template <class T>
void read_field(const json& j, const char* key, const std::string& path, T& dst) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(dst);
  } catch (const json::exception& e) {
    bad(path + "." + std::string(key), e.what());
  }
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c;
  check_keys(j, "config", {"problem", "network", "train", "correction", "out", "reference"});

  if (j.contains("problem")) {
    const json& p = j.at("problem");
    check_keys(p, "problem", {"name", "coeff"});
    read_field(p, "name", "problem", c.problem);
    if (p.contains("coeff")) {
      if (!p.at("coeff").is_object()) bad("problem.coeff", "expected an object");
      for (auto it = p.at("coeff").begin(); it != p.at("coeff").end(); ++it) {
        if (!it.value().is_number()) bad("problem.coeff." + it.key(), "expected a number");
        c.coeff[it.key()] = it.value().get<double>();
      }
    }
  }
  if (c.problem.empty()) bad("problem.name", "must not be empty");

  if (j.contains("network")) {
    const json& n = j.at("network");
    check_keys(n, "network", {"trunk", "skip_concat", "activation", "frequency", "branches"});
    read_field(n, "trunk", "network", c.trunk);
    read_field(n, "skip_concat", "network", c.skip_concat);
    read_field(n, "activation", "network", c.activation);
    read_field(n, "frequency", "network", c.frequency);
    if (n.contains("branches")) {
      if (!n.at("branches").is_array()) bad("network.branches", "expected an array");
      c.branches.clear();
      int idx = 0;
      for (const json& b : n.at("branches")) {
        const std::string bp = "network.branches[" + std::to_string(idx++) + "]";
        check_keys(b, bp, {"name", "widths"});
        BranchSpec bs;
        read_field(b, "name", bp, bs.name);
        read_field(b, "widths", bp, bs.widths);
        if (bs.name.empty()) bad(bp + ".name", "must not be empty");
        c.branches.push_back(std::move(bs));
      }
    }
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, "train",
               {"iterations", "batch_interior", "batch_bc", "batch_ic", "lr", "lr_min",
                "warmup_fraction", "adam", "weights", "eval_every", "seed"});
    read_field(t, "iterations", "train", c.train.iterations);
    read_field(t, "batch_interior", "train", c.train.batch_interior);
    read_field(t, "batch_bc", "train", c.train.batch_bc);
    read_field(t, "batch_ic", "train", c.train.batch_ic);
    read_field(t, "lr", "train", c.train.lr);
    read_field(t, "lr_min", "train", c.train.lr_min);
    read_field(t, "warmup_fraction", "train", c.train.warmup_fraction);
    read_field(t, "eval_every", "train", c.train.eval_every);
    read_field(t, "seed", "train", c.train.seed);
    if (t.contains("adam")) {
      const json& a = t.at("adam");
      check_keys(a, "train.adam", {"beta1", "beta2", "eps"});
      read_field(a, "beta1", "train.adam", c.train.adam.beta1);
      read_field(a, "beta2", "train.adam", c.train.adam.beta2);
      read_field(a, "eps", "train.adam", c.train.adam.eps);
    }
    if (t.contains("weights")) {
      const json& w = t.at("weights");
      check_keys(w, "train.weights", {"ic", "bc"});
      read_field(w, "ic", "train.weights", c.train.weights.ic);
      read_field(w, "bc", "train.weights", c.train.weights.bc);
    }
  }

  if (j.contains("correction")) {
    const json& s = j.at("correction");
    check_keys(s, "correction", {"enabled", "tau_sc", "tau_alpha"});
    read_field(s, "enabled", "correction", c.train.correction.enabled);
    read_field(s, "tau_sc", "correction", c.train.correction.tau_sc);
    read_field(s, "tau_alpha", "correction", c.train.correction.tau_alpha);
  }

  read_field(j, "out", "config", c.out);

  if (j.contains("reference")) {
    const json& r = j.at("reference");
    check_keys(r, "reference",
               {"source", "n_modes", "dt", "snapshots", "out_n", "cavity_n", "cavity_tol"});
    read_field(r, "source", "reference", c.reference.source);
    read_field(r, "n_modes", "reference", c.reference.n_modes);
    read_field(r, "dt", "reference", c.reference.dt);
    read_field(r, "snapshots", "reference", c.reference.snapshots);
    read_field(r, "out_n", "reference", c.reference.out_n);
    read_field(r, "cavity_n", "reference", c.reference.cavity_n);
    read_field(r, "cavity_tol", "reference", c.reference.cavity_tol);
  }
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["problem"]["name"] = c.problem;
  j["problem"]["coeff"] = json::object();
  for (const auto& [k, v] : c.coeff) j["problem"]["coeff"][k] = v;

  json& n = j["network"];
  n["trunk"] = c.trunk;
  n["skip_concat"] = c.skip_concat;
  n["activation"] = c.activation;
  n["frequency"] = c.frequency;
  n["branches"] = json::array();
  for (const BranchSpec& b : c.branches)
    n["branches"].push_back({{"name", b.name}, {"widths", b.widths}});

  json& t = j["train"];
  t["iterations"] = c.train.iterations;
  t["batch_interior"] = c.train.batch_interior;
  t["batch_bc"] = c.train.batch_bc;
  t["batch_ic"] = c.train.batch_ic;
  t["lr"] = c.train.lr;
  t["lr_min"] = c.train.lr_min;
  t["warmup_fraction"] = c.train.warmup_fraction;
  t["adam"] = {{"beta1", c.train.adam.beta1},
               {"beta2", c.train.adam.beta2},
               {"eps", c.train.adam.eps}};
  t["weights"] = {{"ic", c.train.weights.ic}, {"bc", c.train.weights.bc}};
  t["eval_every"] = c.train.eval_every;
  t["seed"] = c.train.seed;

  j["correction"] = {{"enabled", c.train.correction.enabled},
                     {"tau_sc", c.train.correction.tau_sc},
                     {"tau_alpha", c.train.correction.tau_alpha}};
  j["out"] = c.out;
  j["reference"] = {{"source", c.reference.source},
                    {"n_modes", c.reference.n_modes},
                    {"dt", c.reference.dt},
                    {"snapshots", c.reference.snapshots},
                    {"out_n", c.reference.out_n},
                    {"cavity_n", c.reference.cavity_n},
                    {"cavity_tol", c.reference.cavity_tol}};
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::string& path, const RunConfig& c) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IntegrityError("cannot write config file: " + path);
  f << config_to_json(c).dump(2) << "\n";
  if (!f) throw IntegrityError("failed while writing config file: " + path);
}

void apply_override(json& j, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // unquoted strings like activation names
  }

  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty path segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

ProblemSpec problem_from(const RunConfig& c) { return make_problem(c.problem, c.coeff); }

NetworkConfig network_from(const RunConfig& c, const ProblemSpec& spec) {
  NetworkConfig n;
  n.trunk = c.trunk;
  n.skip_concat = c.skip_concat;
  n.branches = c.branches;
  n.activation = act_from_name(c.activation);
  n.frequency = c.frequency;
  apply_problem_axes(spec, n);
  if (c.branches.empty()) {
    n.outputs = spec.outputs;
  } else {
    if (c.branches.size() != spec.outputs.size())
      throw ConfigError("network.branches: expected one branch per problem output (" +
                        std::to_string(spec.outputs.size()) + ")");
    for (std::size_t i = 0; i < c.branches.size(); ++i)
      if (c.branches[i].name != spec.outputs[i])
        throw ConfigError("network.branches[" + std::to_string(i) + "]: name '" +
                          c.branches[i].name + "' does not match problem output '" +
                          spec.outputs[i] + "'");
  }
  return n;
}

}  // namespace scpinn
