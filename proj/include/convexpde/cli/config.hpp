#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cpde::cli {

/// One experiment: a subcommand, the pipeline it runs and its parameters.
/// Every schema key is present in `parameters` (defaults filled in).
struct ExperimentConfig {
  std::string subcommand;
  std::string pipeline;
  std::map<std::string, std::string> parameters;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  /// Directory that relative file parameters are resolved against.
  std::string base_dir = ".";

  const std::string& get(const std::string& key) const;  // throws ConfigError
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  /// Path parameter resolved against base_dir; empty if unset.
  std::string get_path(const std::string& key) const;
};

struct SchemaEntry {
  std::string key;
  std::string default_value;
  std::string help;
};

/// Subcommands and their pipelines; the first pipeline is the default.
const std::map<std::string, std::vector<std::string>>& pipelines();
/// Accepted keys of a subcommand (seed, output_dir and pipeline are common).
const std::vector<SchemaEntry>& schema(const std::string& subcommand);

/// Parses flat INI text. Unknown keys, sections, duplicate keys and an
/// unknown subcommand or pipeline raise ConfigError. An empty `pipeline`
/// selects the one named in the text, else the default.
ExperimentConfig parse_config(const std::string& text, const std::string& subcommand,
                              const std::string& pipeline = "", const std::string& base_dir = ".");
/// Same, reading from a file; relative paths resolve against its directory.
ExperimentConfig load_config(const std::string& path, const std::string& subcommand,
                             const std::string& pipeline = "");
/// Defaults only.
ExperimentConfig default_config(const std::string& subcommand, const std::string& pipeline = "");

}  // namespace cpde::cli
