// iclust: simulate, theory and validate commands.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numerical or domain error.

#include <CLI11.hpp>

#include <iostream>

#include "iclust/experiment.hpp"

namespace {

struct Options {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<int> replicates;
  std::string out;
};

void add_common(CLI::App* cmd, Options& o) {
  auto* cfg = cmd->add_option("-c,--config", o.config, "JSON experiment configuration");
  auto* pre = cmd->add_option("-p,--preset", o.preset, "named preset")
                  ->check(CLI::IsMember(iclust::preset_names()));
  cfg->excludes(pre);
  cmd->add_option("-s,--seed", o.seed, "root seed (overrides run.seed)");
  cmd->add_option("-t,--threads", o.threads, "worker threads (overrides run.threads)");
  cmd->add_option("-r,--replicates", o.replicates, "replicates (overrides run.replicates)");
  cmd->add_option("-o,--out", o.out, "output directory (overrides output.directory)");
}

iclust::ExperimentConfig resolve(const Options& o) {
  if (o.config.empty() == o.preset.empty()) {
    throw iclust::ConfigError("exactly one of --config or --preset is required", 0);
  }
  auto c = o.config.empty() ? iclust::preset(o.preset) : iclust::load_config(o.config);
  if (o.seed) c.run.seed = *o.seed;
  if (o.threads) c.run.threads = *o.threads;
  if (o.replicates) {
    if (*o.replicates < 1) throw iclust::ConfigError("--replicates must be >= 1", 0);
    c.run.replicates = *o.replicates;
  }
  if (!o.out.empty()) c.output.directory = o.out;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering Markov chains of point processes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", iclust::kVersion);
  Options sim_opts, theory_opts, validate_opts;
  auto* sim = app.add_subcommand("simulate", "simulate replicates and write pattern CSVs");
  auto* theory = app.add_subcommand("theory", "write closed-form pair correlation functions");
  auto* validate = app.add_subcommand("validate", "global envelope tests against a Poisson null");
  add_common(sim, sim_opts);
  add_common(theory, theory_opts);
  add_common(validate, validate_opts);
  bool print_config = false;
  sim->add_flag("--print-config", print_config, "print the resolved configuration and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      const auto c = resolve(sim_opts);
      if (print_config) {
        std::cout << iclust::config_to_json(c).dump(2) << '\n';
        return 0;
      }
      const auto r = iclust::cmd_simulate(c, c.output.directory);
      std::cout << "wrote " << r.files.size() << " files to " << c.output.directory << '\n';
    } else if (theory->parsed()) {
      const auto c = resolve(theory_opts);
      const auto r = iclust::cmd_theory(c, c.output.directory);
      std::cout << r.report.dump(2) << '\n';
    } else if (validate->parsed()) {
      const auto c = resolve(validate_opts);
      const auto r = iclust::cmd_validate(c, c.output.directory);
      std::cout << r.report.dump(2) << '\n';
    }
  } catch (const iclust::ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const iclust::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 3;
  } catch (const iclust::NumericError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
