#include "tna/bundle.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "tna/errors.hpp"
#include "tna/exports.hpp"
#include "tna/version.hpp"

namespace tna {

Json bundle_skeleton(const AnalysisConfig& config) {
  Json bundle;
  bundle["schema_version"] = kBundleSchemaVersion;
  bundle["tool"] = {{"name", "tna"}, {"version", kVersion}};
  Json echo;
  for (const auto& [key, value] : config.canonical()) echo[key] = value;
  const auto now = std::chrono::system_clock::now();
  const std::int64_t epoch =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  bundle["provenance"] = {{"generated_at", format_timestamp(epoch)},
                          {"seed", config.seed},
                          {"config_hash", config.hash()}};
  bundle["config"] = std::move(echo);
  return bundle;
}

Json model_to_json(const TransitionModel& model) {
  Json j;
  j["labels"] = model.alphabet.labels;
  j["scaling"] = scaling_name(model.scaling);
  j["initial"] = model.initial;
  Json rows = Json::array();
  for (int i = 0; i < model.size(); ++i) {
    Json row = Json::array();
    for (int k = 0; k < model.size(); ++k) row.push_back(model.at(i, k));
    rows.push_back(std::move(row));
  }
  j["matrix"] = std::move(rows);
  j["zero_rows"] = model.zero_rows();
  return j;
}

TransitionModel model_from_json(const Json& j) {
  TransitionModel model;
  try {
    model.alphabet = Alphabet::from_labels(j.at("labels").get<std::vector<std::string>>());
    model.scaling = parse_scaling(j.at("scaling").get<std::string>());
    model.initial = j.at("initial").get<std::vector<double>>();
    const auto& rows = j.at("matrix");
    const int s = model.alphabet.size();
    if (static_cast<int>(rows.size()) != s ||
        static_cast<int>(model.initial.size()) != s)
      throw data_error("model: dimension mismatch");
    model.matrix.reserve(static_cast<std::size_t>(s) * s);
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != s) throw data_error("model: ragged matrix");
      for (const auto& v : row) model.matrix.push_back(v.get<double>());
    }
  } catch (const Json::exception& e) {
    throw data_error(std::string("malformed model in bundle: ") + e.what());
  }
  return model;
}

Json centralities_to_json(const CentralityReport& report) {
  Json j;
  j["labels"] = report.labels;
  j["in_strength"] = report.in_strength;
  j["out_strength"] = report.out_strength;
  j["self_loops_excluded_from_strength"] = true;
  if (report.has_betweenness) {
    j["betweenness"] = report.betweenness;
    j["betweenness_norm"] = report.betweenness_norm;
    j["betweenness_pairs"] = report.n_betweenness_pairs;
  }
  return j;
}

Json dyads_to_json(const Alphabet& alphabet, const std::vector<DyadPattern>& dyads) {
  Json j = Json::array();
  for (const auto& d : dyads)
    j.push_back({{"a", alphabet.label(d.a)},
                 {"b", alphabet.label(d.b)},
                 {"w_ab", d.w_ab},
                 {"w_ba", d.w_ba},
                 {"threshold", d.threshold}});
  return j;
}

Json cliques_to_json(const Alphabet& alphabet, const std::vector<CliquePattern>& cliques) {
  Json j = Json::array();
  for (const auto& c : cliques) {
    Json nodes = Json::array();
    for (int node : c.nodes) nodes.push_back(alphabet.label(node));
    j.push_back({{"nodes", std::move(nodes)},
                 {"weights", c.weights},
                 {"min_weight", c.min_weight()},
                 {"threshold", c.threshold}});
  }
  return j;
}

Json communities_to_json(const Alphabet& alphabet, const CommunityAssignment& assignment) {
  Json membership;
  for (std::size_t i = 0; i < assignment.community.size(); ++i)
    membership[alphabet.label(static_cast<int>(i))] = assignment.community[i];
  return Json{{"membership", std::move(membership)},
              {"n_communities", assignment.n_communities},
              {"hamiltonian", assignment.hamiltonian},
              {"gamma", assignment.params.gamma},
              {"seed", assignment.params.seed},
              {"sweeps_per_temperature", assignment.params.sweeps_per_temperature},
              {"temperature_steps", assignment.n_temperature_steps}};
}

Json mixture_to_json(const FitResult& fit, const std::vector<BicRow>& table,
                     const std::vector<std::string>& sequence_ids) {
  Json j;
  j["k"] = fit.model.k;
  j["log_likelihood"] = fit.log_likelihood;
  j["bic"] = fit.bic;
  j["n_parameters"] = fit.n_parameters;
  j["n_sequences"] = fit.n_sequences;
  j["n_restarts"] = fit.n_restarts;
  j["n_restarts_converged_to_best"] = fit.n_restarts_converged_to_best;
  j["n_restarts_degenerate"] = fit.n_restarts_degenerate;
  j["n_iterations"] = fit.trace.size();
  j["covariate_names"] = fit.model.covariate_names;
  j["beta"] = fit.model.beta;
  Json comps = Json::array();
  for (const auto& comp : fit.model.components) comps.push_back(model_to_json(comp));
  j["components"] = std::move(comps);
  Json bic_table = Json::array();
  for (const auto& row : table) {
    Json r;
    r["k"] = row.k;
    r["status"] = row.failed ? "failed" : "ok";
    if (!row.failed) {
      r["log_likelihood"] = row.log_likelihood;
      r["bic"] = row.bic;
      r["n_parameters"] = row.n_parameters;
      r["restarts_at_best"] = row.n_restarts_converged;
    }
    bic_table.push_back(std::move(r));
  }
  j["bic_table"] = std::move(bic_table);
  Json posteriors = Json::array();
  for (std::size_t i = 0; i < sequence_ids.size(); ++i) {
    Json row = Json::array();
    for (int c = 0; c < fit.model.k; ++c)
      row.push_back(fit.posteriors[i * static_cast<std::size_t>(fit.model.k) + c]);
    posteriors.push_back({{"sequence", sequence_ids[i]}, {"weights", std::move(row)}});
  }
  j["posteriors"] = std::move(posteriors);
  return j;
}

Json covariate_inference_to_json(const CovariateInference& inference) {
  Json j = Json::array();
  for (const auto& row : inference.rows)
    j.push_back({{"cluster", row.cluster},
                 {"variable", row.variable},
                 {"estimate", row.estimate},
                 {"se", row.se},
                 {"ci_low", row.ci_low},
                 {"ci_high", row.ci_high},
                 {"t", row.t},
                 {"p", row.p}});
  return j;
}

Json bootstrap_to_json(const EdgeBootstrapResult& result) {
  Json j;
  j["b"] = result.params.b;
  j["threshold"] = result.params.threshold;
  j["alpha"] = result.params.alpha;
  j["rule"] = retention_rule_name(result.params.rule);
  j["seed"] = result.params.seed;
  Json edges = Json::array();
  for (const auto& e : result.edges)
    edges.push_back({{"from", result.alphabet.label(e.from)},
                     {"to", result.alphabet.label(e.to)},
                     {"observed", e.observed},
                     {"boot_mean", e.boot_mean},
                     {"boot_sd", e.boot_sd},
                     {"ci_low", e.ci_low},
                     {"ci_high", e.ci_high},
                     {"p_value", e.p_value},
                     {"retained", e.retained}});
  j["edges"] = std::move(edges);
  return j;
}

Json permutation_to_json(const PermutationResult& result) {
  Json j;
  j["n_permutations"] = result.params.n_permutations;
  j["seed"] = result.params.seed;
  Json edges = Json::array();
  for (const auto& e : result.edges)
    edges.push_back({{"from", result.alphabet.label(e.from)},
                     {"to", result.alphabet.label(e.to)},
                     {"observed_diff", e.observed_diff},
                     {"p_value", e.p_value}});
  j["edges"] = std::move(edges);
  return j;
}

Json disparity_to_json(const DisparityResult& result) {
  Json j;
  j["significance"] = result.significance;
  Json edges = Json::array();
  for (const auto& e : result.edges)
    edges.push_back({{"from", result.alphabet.label(e.from)},
                     {"to", result.alphabet.label(e.to)},
                     {"weight", e.weight},
                     {"alpha_source", e.alpha_source},
                     {"alpha_target", e.alpha_target},
                     {"alpha", e.alpha},
                     {"retained", e.retained}});
  j["edges"] = std::move(edges);
  return j;
}

Json stability_to_json(const StabilityResult& result) {
  return Json{{"measure", measure_name(result.measure)},
              {"drop_proportions", result.drop_proportions},
              {"mean_correlations", result.mean_correlations},
              {"cs_coefficient", result.cs_coefficient},
              {"n_reps", result.params.n_reps},
              {"seed", result.params.seed}};
}

Json subtraction_to_json(const SubtractionNetwork& sub) {
  Json j;
  j["labels"] = sub.alphabet.labels;
  j["group_a"] = sub.label_a;
  j["group_b"] = sub.label_b;
  Json rows = Json::array();
  const int s = sub.alphabet.size();
  for (int i = 0; i < s; ++i) {
    Json row = Json::array();
    for (int k = 0; k < s; ++k) row.push_back(sub.at(i, k));
    rows.push_back(std::move(row));
  }
  j["delta"] = std::move(rows);
  return j;
}

void write_bundle(const std::string& path, const Json& bundle) {
  atomic_write(path, bundle.dump(2) + "\n");
}

Json load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open bundle: " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw data_error("malformed bundle " + path + ": " + e.what());
  }
}

namespace {

void check_model(const Json& model, const std::string& where,
                 std::vector<std::string>& failures) {
  const auto scaling = model.at("scaling").get<std::string>();
  const auto& matrix = model.at("matrix");
  const auto initial = model.at("initial").get<std::vector<double>>();
  if (scaling == "stochastic") {
    for (std::size_t i = 0; i < matrix.size(); ++i) {
      double row_sum = 0.0;
      for (const auto& v : matrix[i]) row_sum += v.get<double>();
      if (row_sum != 0.0 && std::abs(row_sum - 1.0) > 1e-9)
        failures.push_back(where + ": row " + std::to_string(i) + " sums to " +
                           format_full(row_sum));
    }
    double init_sum = 0.0;
    for (double v : initial) init_sum += v;
    if (init_sum != 0.0 && std::abs(init_sum - 1.0) > 1e-9)
      failures.push_back(where + ": initial probabilities sum to " + format_full(init_sum));
  }
}

}  // namespace

std::vector<std::string> verify_bundle(const Json& bundle) {
  std::vector<std::string> failures;
  try {
    // config hash vs echo
    if (bundle.contains("provenance") && bundle.contains("config")) {
      std::uint64_t h = 0xcbf29ce484222325ULL;
      auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
          h ^= c;
          h *= 0x100000001b3ULL;
        }
        h ^= 0x1f;
        h *= 0x100000001b3ULL;
      };
      for (const auto& [key, value] : bundle.at("config").items()) {
        mix(key);
        mix(value.get<std::string>());
      }
      char buf[24];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
      const auto recorded = bundle.at("provenance").at("config_hash").get<std::string>();
      if (recorded != buf)
        failures.push_back("config_hash " + recorded + " does not match echo (" + buf + ")");
    }

    if (bundle.contains("model")) check_model(bundle.at("model"), "model", failures);

    if (bundle.contains("mixture")) {
      const auto& mixture = bundle.at("mixture");
      const auto& comps = mixture.at("components");
      for (std::size_t c = 0; c < comps.size(); ++c)
        check_model(comps[c], "component " + std::to_string(c + 1), failures);
      for (const auto& row : mixture.at("posteriors")) {
        double total = 0.0;
        for (const auto& w : row.at("weights")) total += w.get<double>();
        if (std::abs(total - 1.0) > 1e-8)
          failures.push_back("posteriors for " + row.at("sequence").get<std::string>() +
                             " sum to " + format_full(total));
      }
      const double logl = mixture.at("log_likelihood").get<double>();
      const double bic = mixture.at("bic").get<double>();
      const double p = mixture.at("n_parameters").get<double>();
      const double n = mixture.at("n_sequences").get<double>();
      const double expected = -2.0 * logl + p * std::log(n);
      if (std::abs(bic - expected) > 1e-6 * std::max(1.0, std::abs(expected)))
        failures.push_back("bic " + format_full(bic) + " != -2logL + p log n (" +
                           format_full(expected) + ")");
    }

    if (bundle.contains("covariate_inference")) {
      for (const auto& row : bundle.at("covariate_inference")) {
        const double est = row.at("estimate").get<double>();
        const double se = row.at("se").get<double>();
        const double lo = row.at("ci_low").get<double>();
        const double hi = row.at("ci_high").get<double>();
        const double t = row.at("t").get<double>();
        if (se <= 0.0) failures.push_back("covariate row with non-positive SE");
        if (std::abs(lo - (est - 1.96 * se)) > 1e-9 ||
            std::abs(hi - (est + 1.96 * se)) > 1e-9)
          failures.push_back("covariate CI is not estimate +/- 1.96 SE for " +
                             row.at("variable").get<std::string>());
        if (se > 0.0 && std::abs(t - est / se) > 1e-9)
          failures.push_back("covariate t != estimate/SE for " +
                             row.at("variable").get<std::string>());
      }
    }

    if (bundle.contains("bootstrap")) {
      const auto& bootstrap = bundle.at("bootstrap");
      const double alpha = bootstrap.at("alpha").get<double>();
      const std::string rule = bootstrap.at("rule").get<std::string>();
      const double threshold = bootstrap.at("threshold").get<double>();
      for (const auto& e : bootstrap.at("edges")) {
        const double lo = e.at("ci_low").get<double>();
        const double hi = e.at("ci_high").get<double>();
        const double p = e.at("p_value").get<double>();
        const bool retained = e.at("retained").get<bool>();
        if (lo > hi) failures.push_back("bootstrap CI bounds out of order");
        if (p < 0.0 || p > 1.0) failures.push_back("bootstrap p-value outside [0,1]");
        const bool expected = rule == "threshold_p" ? p <= alpha : lo >= threshold;
        if (retained != expected) failures.push_back("bootstrap retention inconsistent with rule");
      }
    }

    if (bundle.contains("permutation")) {
      const auto& permutation = bundle.at("permutation");
      const double n_perm = permutation.at("n_permutations").get<double>();
      for (const auto& e : permutation.at("edges")) {
        const double p = e.at("p_value").get<double>();
        if (p < 1.0 / (n_perm + 1.0) - 1e-12 || p > 1.0 + 1e-12)
          failures.push_back("permutation p-value outside [1/(n+1), 1]");
      }
    }
  } catch (const Json::exception& e) {
    failures.push_back(std::string("malformed bundle: ") + e.what());
  }
  return failures;
}

}  // namespace tna
