#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tna/graph.hpp"
#include "tna/markov.hpp"

namespace tna {

enum class RetentionRule { threshold_p, ci_lower };

RetentionRule parse_retention_rule(const std::string& name);
const char* retention_rule_name(RetentionRule rule);

struct BootstrapOptions {
  int b = 1000;
  double threshold = 0.05;  // minimum meaningful weight
  double alpha = 0.05;
  std::uint64_t seed = 1;
  RetentionRule rule = RetentionRule::threshold_p;
  int threads = 0;
};

struct EdgeStat {
  int from = 0, to = 0;
  double observed = 0.0;
  double boot_mean = 0.0;
  double boot_sd = 0.0;
  double ci_low = 0.0;   // percentile CI at alpha/2
  double ci_high = 0.0;  // percentile CI at 1 - alpha/2
  double p_value = 0.0;  // share of replicates with weight < threshold
  bool retained = false;
};

struct EdgeBootstrapResult {
  Alphabet alphabet;
  TransitionModel observed;        // stochastic model from the full sample
  std::vector<EdgeStat> edges;     // observed edges, row-major order
  BootstrapOptions params;
};

/// Case-resampling bootstrap with the whole sequence as the sampling unit
/// (within-sequence dependency is preserved). Each replicate resamples the
/// sequences with replacement and re-estimates the stochastic matrix; an
/// edge is retained when p <= alpha (threshold_p rule) or when the CI lower
/// bound clears the threshold (ci_lower rule). Deterministic under a fixed
/// seed regardless of thread count.
EdgeBootstrapResult bootstrap_edges(std::span<const StateSequence> sequences,
                                    const Alphabet& alphabet,
                                    const BootstrapOptions& options = {});

struct PermutationOptions {
  int n_permutations = 1000;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct EdgeDiff {
  int from = 0, to = 0;
  double observed_diff = 0.0;  // group A minus group B
  double p_value = 0.0;        // two-sided, add-one corrected
};

struct PermutationResult {
  Alphabet alphabet;
  std::vector<EdgeDiff> edges;  // every ordered pair, row-major
  PermutationOptions params;
};

/// Shuffles sequence-to-group labels (group sizes preserved) and compares
/// |permuted difference| against |observed| per edge;
/// p = (1 + #exceed) / (n_perm + 1).
PermutationResult permutation_compare(std::span<const StateSequence> group_a,
                                      std::span<const StateSequence> group_b,
                                      const Alphabet& alphabet,
                                      const PermutationOptions& options = {});

struct DisparityEdge {
  int from = 0, to = 0;
  double weight = 0.0;
  double alpha_source = 0.0;  // (1 - w/out_strength)^(out_degree - 1)
  double alpha_target = 0.0;  // same from the target's incoming side
  double alpha = 0.0;         // min of the two
  bool retained = false;
};

struct DisparityResult {
  Alphabet alphabet;
  std::vector<DisparityEdge> edges;  // off-diagonal observed edges
  double significance = 0.05;
};

/// Disparity-filter null model: an edge survives when its normalized weight
/// is incompatible with a uniform split of the node's strength, evaluated
/// from both endpoints. Degree-1 edges always survive (alpha defined as 0).
/// Strengths and degrees exclude self-loops, so self-loop edges are not
/// evaluated.
DisparityResult disparity_filter(const TransitionNetwork& net, double significance = 0.05);

enum class CentralityMeasure { in_strength, out_strength, betweenness };

CentralityMeasure parse_measure(const std::string& name);
const char* measure_name(CentralityMeasure measure);

struct StabilityOptions {
  std::vector<double> drop_proportions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  int n_reps = 250;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct StabilityResult {
  CentralityMeasure measure = CentralityMeasure::in_strength;
  std::vector<double> drop_proportions;
  std::vector<double> mean_correlations;  // Spearman vs full-sample values
  double cs_coefficient = 0.0;  // largest drop with mean correlation >= 0.7
  StabilityOptions params;
};

/// Case-dropping stability: re-estimates the model on random subsets and
/// rank-correlates the chosen centrality against the full-sample values.
StabilityResult centrality_stability(std::span<const StateSequence> sequences,
                                     const Alphabet& alphabet, CentralityMeasure measure,
                                     const StabilityOptions& options = {});

}  // namespace tna
