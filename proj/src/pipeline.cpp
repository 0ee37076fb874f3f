#include "tna/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "tna/bundle.hpp"
#include "tna/errors.hpp"
#include "tna/exports.hpp"
#include "tna/graph.hpp"
#include "tna/inference.hpp"
#include "tna/mixture.hpp"
#include "tna/rng.hpp"

namespace tna {

namespace fs = std::filesystem;

namespace {

ColumnSchema schema_from_config(const AnalysisConfig& config) {
  ColumnSchema schema;
  schema.unit_column = config.unit_column;
  schema.actor_column = config.actor_column;
  schema.time_column = config.time_column;
  schema.code_column = config.code_column;
  schema.time_format = config.time_format;
  schema.delimiter = config.delimiter;
  schema.alphabet = config.alphabet;
  return schema;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw config_error(std::string("config: no ") + what + " path set");
  if (!fs::exists(path))
    throw config_error(std::string(what) + " file not found: " + path);
}

ExportMeta meta_for(const AnalysisConfig& config) {
  return ExportMeta{config.seed, config.hash()};
}

std::string out_path(const AnalysisConfig& config, const std::string& name) {
  return (fs::path(config.out_dir) / name).string();
}

UnitTable load_unit_table(const AnalysisConfig& config) {
  require_file(config.covariates_path, "covariates");
  return read_unit_table(config.covariates_path, config.covariate_unit_column,
                         config.delimiter);
}

}  // namespace

std::vector<std::string> PipelineData::sequence_ids() const {
  std::vector<std::string> ids;
  ids.reserve(sequences.size());
  for (const auto& seq : sequences)
    ids.push_back(seq.unit + "#" + std::to_string(seq.session));
  return ids;
}

PipelineData run_estimation(const AnalysisConfig& config) {
  require_file(config.events_path, "events");
  PipelineData data;
  data.log = ingest_file(config.events_path, schema_from_config(config));
  data.sequences = sessionize(data.log, config.session_policy());

  if (!config.unit_filter.empty())
    data.sequences = filter_unit(data.sequences,
                                 Selector{Selector::Kind::unit, config.unit_filter});
  if (!config.actor_filter.empty())
    data.sequences = filter_unit(data.sequences,
                                 Selector{Selector::Kind::actor, config.actor_filter});

  if (!config.covariate_columns.empty()) {
    const UnitTable table = load_unit_table(config);
    attach_covariates(data.sequences, table, config.covariate_columns);
  }

  if (config.tally_scope == "unit") data.sequences = merge_unit_sessions(data.sequences);

  data.counts = tally(data.sequences, data.log.alphabet);
  data.model = estimate(data.counts, config.scaling, config.pseudocount);
  return data;
}

void cmd_estimate(const AnalysisConfig& config) {
  const PipelineData data = run_estimation(config);
  const ExportMeta meta = meta_for(config);

  write_matrix_csv(out_path(config, "matrix.csv"), data.model, meta);
  write_network_dot(out_path(config, "network.dot"), data.model, meta,
                    config.scaling != Scaling::count);
  write_graphml(out_path(config, "network.graphml"), data.model, meta);

  Json bundle = bundle_skeleton(config);
  bundle["data"] = {{"n_events", data.log.events.size()},
                    {"n_units", data.log.n_units()},
                    {"n_sequences", data.counts.n_sequences},
                    {"n_transitions", data.counts.n_transitions}};
  bundle["model"] = model_to_json(data.model);
  write_bundle(out_path(config, "bundle_estimate.json"), bundle);

  std::cout << "estimated " << data.model.size() << "-state model from "
            << data.log.n_units() << " units / " << data.counts.n_sequences
            << " sessions (" << data.counts.n_transitions << " transitions)\n";
}

void cmd_analyze(const AnalysisConfig& config) {
  TransitionModel model;
  Json data_section;
  if (!config.bundle_path.empty()) {
    const Json source = load_bundle(config.bundle_path);
    if (!source.contains("model"))
      throw data_error("bundle " + config.bundle_path + " has no model section");
    model = model_from_json(source.at("model"));
    if (source.contains("data")) data_section = source.at("data");
  } else {
    const PipelineData data = run_estimation(config);
    model = data.model;
    data_section = {{"n_events", data.log.events.size()},
                    {"n_units", data.log.n_units()},
                    {"n_sequences", data.counts.n_sequences},
                    {"n_transitions", data.counts.n_transitions}};
  }

  const TransitionNetwork net{model};
  const ExportMeta meta = meta_for(config);

  const CentralityReport report = centralities(net);
  const auto dyads = find_dyads(net, config.dyad_threshold);
  const auto cliques = find_cliques(net, config.clique_size, config.clique_threshold);
  SpinglassParams sg;
  sg.gamma = config.spinglass_gamma;
  sg.sweeps_per_temperature = config.spinglass_sweeps;
  sg.seed = derive_seed(config.seed, "spinglass");
  const CommunityAssignment communities = communities_spinglass(net, sg);

  write_centralities_csv(out_path(config, "centralities.csv"), report, meta);
  write_dyads_csv(out_path(config, "dyads.csv"), net.alphabet(), dyads, meta);
  write_cliques_csv(out_path(config, "cliques.csv"), net.alphabet(), cliques, meta);
  write_communities_csv(out_path(config, "communities.csv"), net.alphabet(), communities, meta);
  write_network_dot(out_path(config, "network.dot"), model, meta,
                    config.scaling != Scaling::count);

  Json bundle = bundle_skeleton(config);
  if (!data_section.is_null()) bundle["data"] = data_section;
  bundle["model"] = model_to_json(model);
  bundle["centralities"] = centralities_to_json(report);
  bundle["patterns"] = {{"dyad_threshold", config.dyad_threshold},
                        {"clique_threshold", config.clique_threshold},
                        {"clique_size", config.clique_size},
                        {"dyads", dyads_to_json(net.alphabet(), dyads)},
                        {"cliques", cliques_to_json(net.alphabet(), cliques)}};
  bundle["communities"] = communities_to_json(net.alphabet(), communities);
  write_bundle(out_path(config, "bundle_analyze.json"), bundle);

  std::cout << "analyzed " << model.size() << "-state network: " << dyads.size()
            << " dyads, " << cliques.size() << " cliques, " << communities.n_communities
            << " communities\n";
}

void cmd_cluster(const AnalysisConfig& config) {
  const PipelineData data = run_estimation(config);
  if (config.scaling != Scaling::stochastic)
    throw config_error("cluster requires stochastic scaling");

  EmOptions options;
  options.restarts = config.restarts;
  options.tolerance = config.em_tolerance;
  options.max_iterations = config.em_max_iterations;
  options.seed = derive_seed(config.seed, "mixture");
  options.threads = config.threads;

  const SelectKResult selection =
      select_k(data.sequences, data.log.alphabet, config.covariate_columns, config.k_min,
               config.k_max, options);
  const FitResult& fit = selection.best;
  const ExportMeta meta = meta_for(config);

  write_bic_csv(out_path(config, "bic.csv"), selection.table, meta);
  const auto ids = data.sequence_ids();
  write_posteriors_csv(out_path(config, "posteriors.csv"), fit, ids, meta);
  const auto nets = cluster_networks(fit);
  for (std::size_t c = 0; c < nets.size(); ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "cluster_%zu.dot", c + 1);
    write_network_dot(out_path(config, name), nets[c].model, meta, true);
  }

  Json bundle = bundle_skeleton(config);
  bundle["model"] = model_to_json(data.model);
  bundle["mixture"] = mixture_to_json(fit, selection.table, ids);

  // covariate inference last: everything above is already on disk if it fails
  std::string inference_error;
  if (!config.covariate_columns.empty() && fit.model.k >= 2) {
    try {
      const CovariateInference inference = covariate_inference(fit, data.sequences);
      write_covariates_csv(out_path(config, "covariates.csv"), inference, meta);
      bundle["covariate_inference"] = covariate_inference_to_json(inference);
    } catch (const numeric_error& e) {
      inference_error = e.what();
      bundle["covariate_inference_error"] = inference_error;
    }
  }
  write_bundle(out_path(config, "bundle_cluster.json"), bundle);

  std::cout << "selected k=" << selection.best_k << " (bic=" << format_full(fit.bic)
            << ", logL=" << format_full(fit.log_likelihood) << ", "
            << fit.n_restarts_converged_to_best << "/" << fit.n_restarts
            << " restarts at best)\n";
  if (!inference_error.empty())
    throw numeric_error("covariate inference failed: " + inference_error);
}

void cmd_validate(const AnalysisConfig& config) {
  const PipelineData data = run_estimation(config);
  if (config.scaling != Scaling::stochastic)
    throw config_error("validate requires stochastic scaling");
  const ExportMeta meta = meta_for(config);

  BootstrapOptions boot;
  boot.b = config.bootstrap_b;
  boot.threshold = config.bootstrap_threshold;
  boot.alpha = config.bootstrap_alpha;
  boot.rule = parse_retention_rule(config.retention_rule);
  boot.seed = derive_seed(config.seed, "bootstrap");
  boot.threads = config.threads;
  const EdgeBootstrapResult bootstrap = bootstrap_edges(data.sequences, data.log.alphabet, boot);

  std::vector<std::pair<int, int>> retained, dropped;
  for (const auto& e : bootstrap.edges)
    (e.retained ? retained : dropped).emplace_back(e.from, e.to);
  write_bootstrap_csv(out_path(config, "bootstrap_edges.csv"), bootstrap, meta);
  write_edges_dot(out_path(config, "network_retained.dot"), bootstrap.observed, retained,
                  meta, "retained");
  write_edges_dot(out_path(config, "network_dropped.dot"), bootstrap.observed, dropped,
                  meta, "dropped");

  const DisparityResult disparity =
      disparity_filter(TransitionNetwork{data.model}, config.bootstrap_alpha);
  write_disparity_csv(out_path(config, "disparity.csv"), disparity, meta);

  StabilityOptions stab;
  stab.drop_proportions = config.drop_proportions;
  stab.n_reps = config.stability_reps;
  stab.seed = derive_seed(config.seed, "stability");
  stab.threads = config.threads;
  const StabilityResult stability = centrality_stability(
      data.sequences, data.log.alphabet, parse_measure(config.stability_measure), stab);
  write_stability_csv(out_path(config, "stability.csv"), stability, meta);

  Json bundle = bundle_skeleton(config);
  bundle["model"] = model_to_json(data.model);
  bundle["bootstrap"] = bootstrap_to_json(bootstrap);
  bundle["disparity"] = disparity_to_json(disparity);
  bundle["stability"] = stability_to_json(stability);

  // permutation comparison joins validation when a grouping is configured
  if (!config.group_column.empty()) {
    const UnitTable table = load_unit_table(config);
    std::map<std::string, std::vector<StateSequence>> groups;
    for (const auto& seq : data.sequences)
      groups[table.value(seq.unit, config.group_column)].push_back(seq);
    if (groups.size() == 2) {
      PermutationOptions perm;
      perm.n_permutations = config.n_permutations;
      perm.seed = derive_seed(config.seed, "permutation");
      perm.threads = config.threads;
      auto it = groups.begin();
      const auto& a = *it++;
      const auto& b = *it;
      const PermutationResult result =
          permutation_compare(a.second, b.second, data.log.alphabet, perm);
      write_permutation_csv(out_path(config, "permutation.csv"), result, meta);
      bundle["permutation"] = permutation_to_json(result);
    }
  }

  write_bundle(out_path(config, "bundle_validate.json"), bundle);

  std::cout << "bootstrap retained " << retained.size() << " of " << bootstrap.edges.size()
            << " edges; stability cs=" << format_full(stability.cs_coefficient) << "\n";
}

void cmd_compare(const AnalysisConfig& config, const std::string& group_column) {
  if (group_column.empty()) throw config_error("compare requires a group column");
  const PipelineData data = run_estimation(config);
  const UnitTable table = load_unit_table(config);

  std::map<std::string, std::vector<StateSequence>> groups;
  for (const auto& seq : data.sequences)
    groups[table.value(seq.unit, group_column)].push_back(seq);
  if (groups.size() != 2) {
    std::string seen;
    for (const auto& [value, members] : groups) {
      (void)members;
      seen += (seen.empty() ? "" : ", ") + value;
    }
    throw data_error("compare: group column \"" + group_column + "\" must take exactly 2 values, got {" + seen + "}");
  }

  auto it = groups.begin();
  const auto& [label_a, seqs_a] = *it++;
  const auto& [label_b, seqs_b] = *it;

  const TransitionNetwork net_a{estimate(tally(seqs_a, data.log.alphabet), config.scaling)};
  const TransitionNetwork net_b{estimate(tally(seqs_b, data.log.alphabet), config.scaling)};
  SubtractionNetwork sub = subtract(net_a, net_b);
  sub.label_a = label_a;
  sub.label_b = label_b;

  PermutationOptions perm;
  perm.n_permutations = config.n_permutations;
  perm.seed = derive_seed(config.seed, "permutation");
  perm.threads = config.threads;
  const PermutationResult result =
      permutation_compare(seqs_a, seqs_b, data.log.alphabet, perm);

  const ExportMeta meta = meta_for(config);
  write_subtraction_dot(out_path(config, "subtraction.dot"), sub, meta);
  write_permutation_csv(out_path(config, "permutation.csv"), result, meta);

  Json bundle = bundle_skeleton(config);
  bundle["comparison"] = {{"group_column", group_column},
                          {"group_a", label_a},
                          {"group_b", label_b},
                          {"n_sequences_a", seqs_a.size()},
                          {"n_sequences_b", seqs_b.size()},
                          {"subtraction", subtraction_to_json(sub)},
                          {"permutation", permutation_to_json(result)}};
  write_bundle(out_path(config, "bundle_compare.json"), bundle);

  std::cout << "compared " << label_a << " (" << seqs_a.size() << " sequences) vs "
            << label_b << " (" << seqs_b.size() << " sequences)\n";
}

void cmd_simulate(const AnalysisConfig& config) {
  if (config.sim_states.size() < 2) throw config_error("simulate: need at least 2 states");
  if (config.sim_clusters < 1 || config.sim_n_sequences < 1 || config.sim_length < 2)
    throw config_error("simulate: clusters >= 1, n_sequences >= 1, length >= 2 required");
  if (config.sim_concentration <= 0.0)
    throw config_error("simulate: concentration must be > 0");

  const Alphabet alphabet = Alphabet::from_labels(config.sim_states);
  const int s = alphabet.size();
  const int k = config.sim_clusters;
  Rng rng(derive_seed(config.seed, "simulate"));

  // ground-truth components with Dirichlet(concentration) rows; smaller
  // concentration gives sharper rows
  std::vector<TransitionModel> truth(static_cast<std::size_t>(k));
  for (auto& component : truth) {
    component.alphabet = alphabet;
    component.scaling = Scaling::stochastic;
    component.initial.assign(static_cast<std::size_t>(s), 0.0);
    component.matrix.assign(static_cast<std::size_t>(s) * s, 0.0);
    rng.dirichlet(config.sim_concentration, component.initial);
    for (int i = 0; i < s; ++i)
      rng.dirichlet(config.sim_concentration,
                    {component.matrix.data() + static_cast<std::size_t>(i) * s,
                     static_cast<std::size_t>(s)});
  }

  constexpr std::int64_t base_epoch = 1767225600;  // 2026-01-01T00:00:00Z
  std::ostringstream events;
  events << "unit,actor,time,code\n";
  std::ostringstream covariates;
  covariates << "unit,x\n";
  Json truth_assignments = Json::array();

  for (int i = 0; i < config.sim_n_sequences; ++i) {
    const int cluster = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    const auto& component = truth[static_cast<std::size_t>(cluster)];
    char unit[24];
    std::snprintf(unit, sizeof unit, "u%05d", i);
    int state = rng.categorical(component.initial);
    std::int64_t t = base_epoch + static_cast<std::int64_t>(i) * 86400;
    for (int step = 0; step < config.sim_length; ++step) {
      events << unit << ",a1," << format_timestamp(t) << ','
             << alphabet.label(state) << '\n';
      t += 60;
      state = rng.categorical(component.row(state));
    }
    // numeric covariate with a cluster-dependent mean
    const double x =
        config.sim_covariate_effect * static_cast<double>(cluster) + rng.normal();
    covariates << unit << ',' << format_full(x) << '\n';
    truth_assignments.push_back({{"unit", unit}, {"cluster", cluster + 1}});
  }

  atomic_write(out_path(config, "events.csv"), events.str());
  atomic_write(out_path(config, "covariates.csv"), covariates.str());

  Json truth_json = bundle_skeleton(config);
  truth_json["truth"] = Json::object();
  truth_json["truth"]["k"] = k;
  truth_json["truth"]["labels"] = alphabet.labels;
  Json comps = Json::array();
  for (const auto& component : truth) comps.push_back(model_to_json(component));
  truth_json["truth"]["components"] = std::move(comps);
  truth_json["truth"]["assignments"] = std::move(truth_assignments);
  write_bundle(out_path(config, "truth.json"), truth_json);

  std::cout << "simulated " << config.sim_n_sequences << " sequences of length "
            << config.sim_length << " over " << s << " states (" << k << " clusters)\n";
}

int cmd_verify(const std::string& bundle_path) {
  const Json bundle = load_bundle(bundle_path);
  const auto failures = verify_bundle(bundle);
  if (failures.empty()) {
    std::cout << "bundle " << bundle_path << ": consistent\n";
    return 0;
  }
  for (const auto& failure : failures)
    std::cerr << "verify: " << failure << "\n";
  return static_cast<int>(failures.size());
}

}  // namespace tna
