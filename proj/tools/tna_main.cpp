#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tna/config.hpp"
#include "tna/errors.hpp"
#include "tna/pipeline.hpp"
#include "tna/version.hpp"

namespace {

struct Cli {
  std::string config_path;
  std::string out_dir;
  std::string scaling;
  std::string bundle_path;
  std::string group_column;
  std::uint64_t seed = 0;
  int threads = -1;
  double dyad_threshold = -1.0;
  double clique_threshold = -1.0;
  double gamma = -1.0;
  std::vector<std::string> units;
  std::vector<std::string> actors;
  int k_min = 0, k_max = 0, restarts = 0;
  int bootstrap_b = 0, n_perm = 0;
  double alpha = -1.0, threshold = -1.0;
};

tna::AnalysisConfig resolve_config(const Cli& cli, const CLI::App& app,
                                   const CLI::App* sub) {
  if (cli.config_path.empty())
    throw tna::config_error("no config file given (use --config)");
  tna::AnalysisConfig cfg = tna::AnalysisConfig::load(cli.config_path);

  if (app.count("--seed")) cfg.seed = cli.seed;
  if (app.count("--out-dir")) cfg.out_dir = cli.out_dir;
  if (app.count("--scaling")) cfg.scaling = tna::parse_scaling(cli.scaling);
  if (app.count("--threads")) cfg.threads = cli.threads;

  if (sub) {
    auto given = [&](const char* name) {
      const CLI::Option* option = sub->get_option_no_throw(name);
      return option != nullptr && option->count() > 0;
    };
    if (given("--bundle")) cfg.bundle_path = cli.bundle_path;
    if (given("--dyad-threshold")) cfg.dyad_threshold = cli.dyad_threshold;
    if (given("--clique-threshold")) cfg.clique_threshold = cli.clique_threshold;
    if (given("--gamma")) cfg.spinglass_gamma = cli.gamma;
    if (given("--unit")) cfg.unit_filter = cli.units;
    if (given("--actor")) cfg.actor_filter = cli.actors;
    if (given("--k-min")) cfg.k_min = cli.k_min;
    if (given("--k-max")) cfg.k_max = cli.k_max;
    if (given("--restarts")) cfg.restarts = cli.restarts;
    if (given("--b")) cfg.bootstrap_b = cli.bootstrap_b;
    if (given("--alpha")) cfg.bootstrap_alpha = cli.alpha;
    if (given("--threshold")) cfg.bootstrap_threshold = cli.threshold;
    if (given("--n-perm")) cfg.n_permutations = cli.n_perm;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tna: transition network analysis for coded event logs"};
  app.set_version_flag("--version", std::string("tna ") + tna::kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Cli cli;
  app.add_option("--config,-c", cli.config_path, "analysis config file (INI)");
  app.add_option("--seed", cli.seed, "master seed override");
  app.add_option("--out-dir", cli.out_dir, "output directory override");
  app.add_option("--scaling", cli.scaling, "stochastic | frequency | count");
  app.add_option("--threads", cli.threads, "worker threads (0 = all cores)");

  auto* estimate = app.add_subcommand("estimate", "ingest, sessionize, and estimate the model");
  estimate->add_option("--unit", cli.units, "restrict to these units");
  estimate->add_option("--actor", cli.actors, "restrict to these actors (idiographic)");

  auto* analyze = app.add_subcommand("analyze", "centralities, dyads, cliques, communities");
  analyze->add_option("--bundle", cli.bundle_path, "read the model from this bundle");
  analyze->add_option("--dyad-threshold", cli.dyad_threshold, "mutual-pair threshold");
  analyze->add_option("--clique-threshold", cli.clique_threshold, "clique threshold");
  analyze->add_option("--gamma", cli.gamma, "spin-glass resolution");
  analyze->add_option("--unit", cli.units, "restrict to these units");
  analyze->add_option("--actor", cli.actors, "restrict to these actors");

  auto* cluster = app.add_subcommand("cluster", "mixture model selection over a k range");
  cluster->add_option("--k-min", cli.k_min, "smallest cluster count");
  cluster->add_option("--k-max", cli.k_max, "largest cluster count");
  cluster->add_option("--restarts", cli.restarts, "EM restarts per k");

  auto* validate = app.add_subcommand("validate", "bootstrap, disparity, stability");
  validate->add_option("--b", cli.bootstrap_b, "bootstrap replicates");
  validate->add_option("--alpha", cli.alpha, "significance level");
  validate->add_option("--threshold", cli.threshold, "minimum meaningful weight");

  auto* compare = app.add_subcommand("compare", "subtraction network and permutation test");
  compare->add_option("--group-column", cli.group_column, "covariates-file column with 2 values")
      ->required();
  compare->add_option("--n-perm", cli.n_perm, "label permutations");

  auto* simulate = app.add_subcommand("simulate", "write a synthetic event log plus ground truth");

  auto* verify = app.add_subcommand("verify", "check a bundle's self-consistency");
  verify->add_option("--bundle", cli.bundle_path, "bundle to check")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (verify->parsed()) return tna::cmd_verify(cli.bundle_path) == 0 ? 0 : 4;
    const CLI::App* sub = app.get_subcommands().front();
    const tna::AnalysisConfig cfg = resolve_config(cli, app, sub);
    if (estimate->parsed())
      tna::cmd_estimate(cfg);
    else if (analyze->parsed())
      tna::cmd_analyze(cfg);
    else if (cluster->parsed())
      tna::cmd_cluster(cfg);
    else if (validate->parsed())
      tna::cmd_validate(cfg);
    else if (compare->parsed())
      tna::cmd_compare(cfg, cli.group_column);
    else if (simulate->parsed())
      tna::cmd_simulate(cfg);
    return 0;
  } catch (const tna::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tna::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const tna::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
