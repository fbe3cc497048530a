#include "convexpde/cli/config.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "convexpde/errors.hpp"

namespace cpde::cli {

namespace {

const std::vector<SchemaEntry> kCommon = {
    {"pipeline", "", "pipeline name"},
    {"seed", "1", "master seed; every random draw derives from it"},
    {"output_dir", ".", "directory for artifacts"},
};

const std::map<std::string, std::vector<SchemaEntry>>& schemas() {
  static const std::map<std::string, std::vector<SchemaEntry>> s = {
      {"ot",
       {{"source", "", "CSV of source atoms x1,...,xd,weight (random if empty)"},
        {"target", "", "CSV of target atoms"},
        {"atoms", "6", "atoms per random measure"},
        {"dim", "2", "dimension of random measures"},
        {"cycles", "1000", "sampled cycles for the monotonicity check"},
        {"cycle_length", "4", "longest sampled cycle"}}},
      {"iso",
       {{"domain", "square", "square | disk | rectangle a b | polygon x1 y1 ... | cube | ball"},
        {"resolutions", "32 64", "grid resolutions"}}},
      {"scl",
       {{"flux", "burgers", "burgers | linear c | concave-convex c3 c2 c1"},
        {"initial", "riemann 1 0 0.25 0.75",
         "riemann uL uR a b | sine base amplitude k | file <csv with x,u>"},
        {"cells", "400", "cells"},
        {"n_a", "64", "levels of the lift"},
        {"T", "0.4", "final time"},
        {"cfl", "1", "dt = cfl * h / L"},
        {"mode", "aligned", "aligned | interpolate"},
        {"snapshot_every", "0", "steps between snapshots (0: initial and final only)"},
        {"levels", "3", "refinement levels of compare (cells and n_a double)"}}},
      {"euler",
       {{"omega", "1", "angular speed of the rigid rotation"},
        {"t0", "0", "start time"},
        {"t1", "1", "end time"},
        {"n_space", "64", "pressure lattice cells per axis"},
        {"n_time", "16", "pressure time intervals"},
        {"n_rings", "10", "endpoint rings"},
        {"n_angles", "20", "endpoints per ring"},
        {"n_seg", "32", "path segments"},
        {"perturbations", "20", "random perturbations"},
        {"amplitude", "0.1", "max |delta| over the domain"},
        {"pairs", "50", "concavity midpoint pairs"}}},
      {"abi",
       {{"profile", "manifold-sine 0.1 1",
         "rest | manifold-sine A k | chaplygin-riemann hL QL hR QR | boosted <profile> u"},
        {"cells", "100", "cells"},
        {"T", "0.1", "final time (ignored when steps > 0)"},
        {"steps", "0", "number of steps (0: derive from T)"},
        {"cfl", "0.5", "dt = cfl * dx / lambda_max"},
        {"snapshot_every", "0", "steps between snapshots (0: initial and final only)"},
        {"monitor_every", "0", "steps between flux-spectrum checks (0: never)"}}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::map<std::string, std::vector<std::string>>& pipelines() {
  static const std::map<std::string, std::vector<std::string>> p = {
      {"ot", {"solve"}},
      {"iso", {"chain", "bound"}},
      {"scl", {"evolve", "compare"}},
      {"euler", {"maximizer"}},
      {"abi", {"evolve", "manifold-drift"}},
  };
  return p;
}

const std::vector<SchemaEntry>& schema(const std::string& subcommand) {
  auto it = schemas().find(subcommand);
  if (it == schemas().end()) throw ConfigError("unknown subcommand '" + subcommand + "'");
  return it->second;
}

const std::string& ExperimentConfig::get(const std::string& key) const {
  auto it = parameters.find(key);
  if (it == parameters.end()) throw ConfigError("config: no parameter '" + key + "'");
  return it->second;
}

double ExperimentConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: '" + key + "' must be a number, got '" + v + "'");
}

int ExperimentConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used == v.size() && d >= INT32_MIN && d <= INT32_MAX) return static_cast<int>(d);
  } catch (const std::exception&) {
  }
  throw ConfigError("config: '" + key + "' must be an integer, got '" + v + "'");
}

std::vector<int> ExperimentConfig::get_int_list(const std::string& key) const {
  std::istringstream in(get(key));
  std::vector<int> out;
  for (std::string tok; in >> tok;) {
    try {
      std::size_t used = 0;
      const int d = std::stoi(tok, &used);
      if (used == tok.size()) {
        out.push_back(d);
        continue;
      }
    } catch (const std::exception&) {
    }
    throw ConfigError("config: '" + key + "' must be a list of integers");
  }
  if (out.empty()) throw ConfigError("config: '" + key + "' is empty");
  return out;
}

std::string ExperimentConfig::get_path(const std::string& key) const {
  const std::string& v = get(key);
  if (v.empty()) return v;
  std::filesystem::path p(v);
  return p.is_absolute() ? v : (std::filesystem::path(base_dir) / p).string();
}

ExperimentConfig default_config(const std::string& subcommand, const std::string& pipeline) {
  return parse_config("", subcommand, pipeline);
}

ExperimentConfig parse_config(const std::string& text, const std::string& subcommand,
                              const std::string& pipeline, const std::string& base_dir) {
  const auto& keys = schema(subcommand);
  ExperimentConfig cfg;
  cfg.subcommand = subcommand;
  cfg.base_dir = base_dir;
  for (const auto& e : kCommon) cfg.parameters[e.key] = e.default_value;
  for (const auto& e : keys) cfg.parameters[e.key] = e.default_value;

  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  std::set<std::string> seen;
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw ConfigError("config: sections are not supported ('[" + key + "]')");
    if (!cfg.parameters.count(key))
      throw ConfigError("config: unknown key '" + key + "' for subcommand " + subcommand);
    if (!seen.insert(key).second) throw ConfigError("config: duplicate key '" + key + "'");
    cfg.parameters[key] = trim(node.data());
  }

  const auto& allowed = pipelines().at(subcommand);
  std::string chosen = pipeline.empty() ? cfg.parameters["pipeline"] : pipeline;
  if (!pipeline.empty() && !cfg.parameters["pipeline"].empty() && cfg.parameters["pipeline"] != pipeline)
    throw ConfigError("config: pipeline '" + cfg.parameters["pipeline"] +
                      "' conflicts with the command line ('" + pipeline + "')");
  if (chosen.empty()) chosen = allowed.front();
  if (std::find(allowed.begin(), allowed.end(), chosen) == allowed.end())
    throw ConfigError("unknown pipeline '" + chosen + "' for subcommand " + subcommand);
  cfg.pipeline = chosen;
  cfg.parameters["pipeline"] = chosen;

  const std::string& seed = cfg.parameters["seed"];
  try {
    std::size_t used = 0;
    cfg.seed = std::stoull(seed, &used);
    if (used != seed.size() || seed.front() == '-') throw std::invalid_argument(seed);
  } catch (const std::exception&) {
    throw ConfigError("config: seed must be a nonnegative integer, got '" + seed + "'");
  }
  cfg.output_dir = cfg.parameters["output_dir"];
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::string& subcommand,
                             const std::string& pipeline) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(ss.str(), subcommand, pipeline, dir.empty() ? "." : dir.string());
}

}  // namespace cpde::cli
