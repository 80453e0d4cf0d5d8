#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "haarlab/errors.hpp"
#include "haarlab/labcli.hpp"

// Exit codes: 0 all checks passed, 1 a check failed or a computation gave up,
// 2 the configuration was rejected.
int main(int argc, char** argv) {
  CLI::App app{"Haar system stability experiments"};
  app.require_subcommand(1);

  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
  std::string config_path;
  run_cmd->add_option("--config", config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);

  std::string experiment, out_dir;
  int dim = 0, resolution = 0;
  std::vector<double> etas;
  std::uint64_t seed = 0;
  bool no_align = false;
  CLI::Option* opt_experiment =
      run_cmd->add_option("--experiment", experiment, "experiment name");
  CLI::Option* opt_dim = run_cmd->add_option("--dim", dim, "dimension");
  CLI::Option* opt_resolution =
      run_cmd->add_option("--resolution", resolution, "cells per axis = 2^J");
  CLI::Option* opt_eta =
      run_cmd->add_option("--eta", etas, "perturbation budget(s)");
  CLI::Option* opt_seed = run_cmd->add_option("--seed", seed, "RNG seed");
  CLI::Option* opt_out = run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_flag("--no-align", no_align,
                    "draw perturbations off the exact-alignment lattice");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    // Overrides are merged into the file's JSON before the one validation
    // pass, so e.g. --no-align can lift the file's alignment requirement.
    std::ifstream in(config_path);
    if (!in) throw haarlab::config_error("config file '" + config_path +
                                         "': cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(ss.str());
    } catch (const std::exception& e) {
      throw haarlab::config_error(std::string("config parse: ") + e.what());
    }
    if (!j.is_object())
      throw haarlab::config_error("config root must be a JSON object");
    if (*opt_experiment) j["experiment"] = experiment;
    if (*opt_dim) j["dim"] = dim;
    if (*opt_resolution) j["resolution"] = resolution;
    if (*opt_eta) j["eta_list"] = etas;
    if (*opt_seed) j["seed"] = seed;
    if (*opt_out) j["out_dir"] = out_dir;
    if (no_align) j["align"] = false;
    const haarlab::ExperimentConfig config =
        haarlab::ExperimentConfig::from_json_text(j.dump());
    return haarlab::run(config);
  } catch (const haarlab::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const haarlab::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
