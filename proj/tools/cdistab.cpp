#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cdistab/errors.hpp"
#include "cdistab/harness.hpp"

using namespace cdistab;

int main(int argc, char** argv) {
  CLI::App app{"Stabilization toolkit for the saturated complex double integrator"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string suite;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration")->required();
    cmd->add_option("--seed", seed, "seed for the initial-condition samplers (overrides config)");
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
  };
  auto* simulate = app.add_subcommand("simulate", "integrate one system and write CSV + summary");
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  auto* sweep = app.add_subcommand("sweep", "window-decrease rates over an (eps, rho, R) grid");
  common(simulate);
  common(verify);
  common(sweep);
  verify->add_option("--suite", suite, "saturation, averaging, lyapunov-T0, window-decrease, "
                                       "capture, l2, hurwitz, equivalence or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    RunConfig config = load_config(config_path);
    for (auto* cmd : {simulate, verify, sweep}) {
      if (cmd->count("--seed")) config.seed = seed;
      if (cmd->count("--out")) config.out = out_dir;
    }
    if (*simulate) return cmd_simulate(config);
    if (*verify) return cmd_verify(config, suite.empty() ? config.verify.suite : suite);
    return cmd_sweep(config);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NotControllableError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
