#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "tna/inference.hpp"
#include "tna/markov.hpp"
#include "tna/sequence.hpp"

namespace tna {

/// Sections of key=value pairs. '#' and ';' start comments; keys are unique
/// within a section. Unknown sections/keys are rejected so typos fail loudly.
struct Ini {
  std::map<std::string, std::map<std::string, std::string>> sections;
};

Ini parse_ini(std::istream& in);

/// Everything a run needs, resolved from the config file plus CLI overrides.
struct AnalysisConfig {
  // [input]
  std::string events_path;
  char delimiter = ',';
  std::string unit_column = "unit";
  std::string actor_column;
  std::string time_column = "time";
  std::string code_column = "code";
  std::string time_format = "%Y-%m-%dT%H:%M:%S";
  std::vector<std::string> alphabet;
  std::string covariates_path;
  std::string covariate_unit_column;  // defaults to unit_column
  std::vector<std::string> covariate_columns;
  std::string group_column;
  std::vector<std::string> unit_filter;
  std::vector<std::string> actor_filter;

  // [session]
  GapMode gap_mode = GapMode::fixed;
  double gap_minutes = 20.0;
  double gap_quantile_q = 0.9;

  // [analysis]
  Scaling scaling = Scaling::stochastic;
  std::string tally_scope = "session";  // or "unit"
  double dyad_threshold = 0.1;
  double clique_threshold = 0.05;
  int clique_size = 3;
  double spinglass_gamma = 1.0;
  int spinglass_sweeps = 50;
  double pseudocount = 0.0;

  // [mixture]
  int k_min = 2;
  int k_max = 8;
  int restarts = 500;
  double em_tolerance = 1e-8;
  int em_max_iterations = 1000;

  // [validation]
  int bootstrap_b = 1000;
  double bootstrap_threshold = 0.05;
  double bootstrap_alpha = 0.05;
  std::string retention_rule = "threshold_p";
  int n_permutations = 1000;
  std::vector<double> drop_proportions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  int stability_reps = 250;
  std::string stability_measure = "in_strength";

  // [simulate]
  std::vector<std::string> sim_states = {"A", "B", "C"};
  int sim_clusters = 1;
  int sim_n_sequences = 200;
  int sim_length = 25;
  double sim_concentration = 2.0;
  double sim_covariate_effect = 0.0;

  // [output] / [run]
  std::string out_dir = "tna_out";
  std::uint64_t seed = 1;
  int threads = 0;

  // set by flags only
  std::string bundle_path;

  static AnalysisConfig load(const std::string& path);
  static AnalysisConfig from_ini(const Ini& ini);

  /// Deterministic "section.key=value" listing of every field, one per
  /// line; the basis of the config hash and the bundle's config echo.
  std::vector<std::pair<std::string, std::string>> canonical() const;

  /// FNV-1a 64-bit hash of the canonical listing, as 16 hex chars.
  std::string hash() const;

  SessionizationPolicy session_policy() const;
};

}  // namespace tna
