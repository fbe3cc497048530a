#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "convexpde/cli/config.hpp"
#include "convexpde/cli/experiment.hpp"
#include "convexpde/errors.hpp"
#include "convexpde/parallel.hpp"

namespace {

std::string keys_footer(const std::string& sub) {
  std::string s = "Config keys (INI, key = value):\n";
  for (const auto& e : cpde::cli::schema(sub))
    s += "  " + e.key + " [" + e.default_value + "]  " + e.help + "\n";
  s += "  seed, output_dir, pipeline\nPipelines:";
  for (const auto& p : cpde::cli::pipelines().at(sub)) s += " " + p;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex reformulations of nonlinear PDEs: experiment driver"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CONVEXPDE_VERSION);

  struct Args {
    std::string pipeline;
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
  };
  Args args;
  for (const auto& [name, pipes] : cpde::cli::pipelines()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " pipelines");
    sub->add_option("pipeline", args.pipeline, "pipeline (default " + pipes.front() + ")");
    sub->add_option("-c,--config", args.config, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", args.out, "output directory (overrides output_dir)");
    sub->add_option("-s,--seed", args.seed, "master seed (overrides seed)");
    sub->add_option("-j,--threads", args.threads,
                    "worker threads (default: CONVEXPDE_THREADS or all cores)");
    sub->footer(keys_footer(name));
  }
  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  cpde::cli::ExperimentConfig cfg;
  try {
    cfg = args.config.empty() ? cpde::cli::parse_config("", sub, args.pipeline)
                              : cpde::cli::load_config(args.config, sub, args.pipeline);
  } catch (const cpde::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cpde::cli::kInputError;
  }
  if (args.out) {
    cfg.output_dir = *args.out;
    cfg.parameters["output_dir"] = *args.out;
  }
  if (args.seed) {
    cfg.seed = *args.seed;
    cfg.parameters["seed"] = std::to_string(*args.seed);
  }
  if (args.threads) cpde::set_worker_count(*args.threads);

  const auto res = cpde::cli::run_experiment(cfg, std::cerr);
  if (!res.manifest_path.empty()) std::cout << res.manifest_path << "\n";
  std::cerr << sub << " " << cfg.pipeline << ": " << res.status << "\n";
  return res.exit_code;
}
