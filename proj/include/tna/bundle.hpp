#pragma once

#include <string>

#include <json.hpp>

#include "tna/config.hpp"
#include "tna/graph.hpp"
#include "tna/inference.hpp"
#include "tna/markov.hpp"
#include "tna/mixture.hpp"

namespace tna {

// Insertion-ordered JSON keeps bundle output deterministic.
using Json = nlohmann::ordered_json;

/// Skeleton with schema version, tool info, provenance (timestamp, seed,
/// config hash) and the full config echo.
Json bundle_skeleton(const AnalysisConfig& config);

Json model_to_json(const TransitionModel& model);
TransitionModel model_from_json(const Json& j);

Json centralities_to_json(const CentralityReport& report);
Json dyads_to_json(const Alphabet& alphabet, const std::vector<DyadPattern>& dyads);
Json cliques_to_json(const Alphabet& alphabet, const std::vector<CliquePattern>& cliques);
Json communities_to_json(const Alphabet& alphabet, const CommunityAssignment& assignment);
Json mixture_to_json(const FitResult& fit, const std::vector<BicRow>& table,
                     const std::vector<std::string>& sequence_ids);
Json covariate_inference_to_json(const CovariateInference& inference);
Json bootstrap_to_json(const EdgeBootstrapResult& result);
Json permutation_to_json(const PermutationResult& result);
Json disparity_to_json(const DisparityResult& result);
Json stability_to_json(const StabilityResult& result);
Json subtraction_to_json(const SubtractionNetwork& sub);

void write_bundle(const std::string& path, const Json& bundle);
Json load_bundle(const std::string& path);

/// Self-consistency checks over whatever sections a bundle contains:
/// stochastic rows sum to 1, posterior rows sum to 1, BIC arithmetic,
/// covariate-table arithmetic (CI = estimate +/- 1.96 SE, t = estimate/SE),
/// bootstrap CI ordering and retention rule, and the config hash against
/// the embedded echo. Returns human-readable failure descriptions.
std::vector<std::string> verify_bundle(const Json& bundle);

}  // namespace tna
