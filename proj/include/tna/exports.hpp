#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tna/graph.hpp"
#include "tna/inference.hpp"
#include "tna/markov.hpp"
#include "tna/mixture.hpp"

namespace tna {

/// Provenance embedded in every output artifact.
struct ExportMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// Writes via a temp file in the same directory plus rename, so a crashed
/// run never leaves a half-written artifact.
void atomic_write(const std::string& path, const std::string& content);

/// Shortest decimal that round-trips a double (>= 12 significant digits
/// whenever that many are needed).
std::string format_full(double value);

/// Matrix file: header row/column of state labels, full-precision entries.
void write_matrix_csv(const std::string& path, const TransitionModel& model,
                      const ExportMeta& meta);

/// DOT export; edge labels at 2 decimals, node pie attribute = initial
/// probability when requested.
void write_network_dot(const std::string& path, const TransitionModel& model,
                       const ExportMeta& meta, bool include_pies);

/// DOT restricted to an explicit edge subset (retained / dropped views).
void write_edges_dot(const std::string& path, const TransitionModel& model,
                     const std::vector<std::pair<int, int>>& edges, const ExportMeta& meta,
                     const std::string& graph_name);

/// Subtraction DOT: signed labels, blue for positive (favors A), red for
/// negative.
void write_subtraction_dot(const std::string& path, const SubtractionNetwork& sub,
                           const ExportMeta& meta);

void write_graphml(const std::string& path, const TransitionModel& model,
                   const ExportMeta& meta);

/// Long-format table (measure,state,value), bar-chart ready.
void write_centralities_csv(const std::string& path, const CentralityReport& report,
                            const ExportMeta& meta);

void write_dyads_csv(const std::string& path, const Alphabet& alphabet,
                     const std::vector<DyadPattern>& dyads, const ExportMeta& meta);

void write_cliques_csv(const std::string& path, const Alphabet& alphabet,
                       const std::vector<CliquePattern>& cliques, const ExportMeta& meta);

void write_communities_csv(const std::string& path, const Alphabet& alphabet,
                           const CommunityAssignment& assignment, const ExportMeta& meta);

void write_bic_csv(const std::string& path, const std::vector<BicRow>& table,
                   const ExportMeta& meta);

void write_covariates_csv(const std::string& path, const CovariateInference& inference,
                          const ExportMeta& meta);

void write_posteriors_csv(const std::string& path, const FitResult& fit,
                          const std::vector<std::string>& sequence_ids,
                          const ExportMeta& meta);

void write_bootstrap_csv(const std::string& path, const EdgeBootstrapResult& result,
                         const ExportMeta& meta);

void write_permutation_csv(const std::string& path, const PermutationResult& result,
                           const ExportMeta& meta);

void write_disparity_csv(const std::string& path, const DisparityResult& result,
                         const ExportMeta& meta);

void write_stability_csv(const std::string& path, const StabilityResult& result,
                         const ExportMeta& meta);

}  // namespace tna
