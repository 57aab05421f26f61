// Command line front end: blowup_lab <simulate|bounds|probability|validate> --config FILE [options]

#include "blowup/config.h"
#include "blowup/errors.h"
#include "blowup/harness.h"

#include <CLI11.hpp>

#include <iostream>

namespace {

int run_experiment(blowup::config::Experiment which, const std::string& path, const blowup::harness::RunOptions& opt) {
  using namespace blowup;
  config::ExperimentConfig cfg;
  try {
    cfg = config::load_config(path);
  } catch (const ConfigError& e) {
    std::cerr << "configuration rejected:\n";
    for (const auto& v : e.violations()) std::cerr << "  - " << v << '\n';
    return 2;
  }
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
  cfg.experiment = which;
  std::cout << cfg.canonical();
  try {
    const auto res = harness::run(cfg, opt);
    for (const auto& f : res.findings)
      std::cerr << "finding [" << f.suite << "]" << (f.explained ? " (variant-explained)" : "") << ": " << f.message
                << '\n';
    std::cout << "wrote " << res.files.size() << " files to " << cfg.output_dir << " in " << res.wall_seconds
              << " s\n";
    return res.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "configuration rejected:\n";
    for (const auto& v : e.violations()) std::cerr << "  - " << v << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  using blowup::config::Experiment;
  CLI::App app{"Pathwise blow-up experiments for non-local reaction-diffusion equations with fractional noise"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BLOWUP_VERSION);

  std::string config_path;
  blowup::harness::RunOptions opt;
  std::size_t jobs = 1;
  bool strict = false;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  opt.log = &std::cerr;

  struct Sub {
    const char* name;
    const char* help;
    Experiment which;
  };
  const Sub subs[] = {
      {"simulate", "Solve the random PDE on an ensemble of paths; write traces and snapshots", Experiment::simulate},
      {"bounds", "Evaluate every pathwise stopping-time bound and certificate against the solver", Experiment::bounds},
      {"probability", "Confront the analytic blow-up probability bounds with Monte Carlo", Experiment::probability},
      {"validate", "Run the invariant and property suite", Experiment::validate},
  };
  Experiment chosen = Experiment::bounds;
  for (const auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("--config,-c", config_path, "configuration file (key = value)")->required()->check(CLI::ExistingFile);
    sc->add_option("--jobs,-j", jobs, "worker threads")->check(CLI::PositiveNumber);
    sc->add_flag("--strict", strict, "exit 1 on any unexplained falsification finding");
    sc->add_option("--seed-override", seed, "replace the configured master seed");
    sc->add_option("--horizon", horizon, "override the solver horizon")->check(CLI::PositiveNumber);
    sc->callback([&chosen, which = s.which] { chosen = which; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  opt.jobs = jobs;
  opt.strict = strict;
  for (auto* sc : app.get_subcommands()) {
    if (sc->count("--seed-override")) opt.seed_override = seed;
    if (sc->count("--horizon")) opt.horizon = horizon;
  }
  return run_experiment(chosen, config_path, opt);
}
