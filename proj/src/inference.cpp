#include "tna/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tna/errors.hpp"
#include "tna/parallel.hpp"
#include "tna/rng.hpp"
#include "tna/stats.hpp"

namespace tna {

RetentionRule parse_retention_rule(const std::string& name) {
  if (name == "threshold_p") return RetentionRule::threshold_p;
  if (name == "ci_lower") return RetentionRule::ci_lower;
  throw config_error("unknown retention rule \"" + name +
                     "\" (expected threshold_p or ci_lower)");
}

const char* retention_rule_name(RetentionRule rule) {
  return rule == RetentionRule::threshold_p ? "threshold_p" : "ci_lower";
}

namespace {

// Stochastic matrix from a subset of sequences given by index, avoiding
// per-replicate copies of the sequence objects.
std::vector<double> estimate_indexed(std::span<const StateSequence> sequences,
                                     std::span<const std::size_t> index, int s) {
  std::vector<double> counts(static_cast<std::size_t>(s) * s, 0.0);
  for (std::size_t i : index) {
    const auto& states = sequences[i].states;
    for (std::size_t t = 1; t < states.size(); ++t)
      counts[static_cast<std::size_t>(states[t - 1]) * s + states[t]] += 1.0;
  }
  for (int row = 0; row < s; ++row) {
    double total = 0.0;
    for (int j = 0; j < s; ++j) total += counts[static_cast<std::size_t>(row) * s + j];
    if (total <= 0.0) continue;
    for (int j = 0; j < s; ++j) counts[static_cast<std::size_t>(row) * s + j] /= total;
  }
  return counts;
}

}  // namespace

EdgeBootstrapResult bootstrap_edges(std::span<const StateSequence> sequences,
                                    const Alphabet& alphabet,
                                    const BootstrapOptions& options) {
  if (sequences.size() < 2) throw data_error("bootstrap: need at least 2 sequences");
  if (options.b < 100) throw config_error("bootstrap: B must be >= 100");
  if (options.alpha < 1.0 / static_cast<double>(options.b))
    throw config_error("bootstrap: B too small for requested alpha resolution (alpha < 1/B)");
  if (options.threshold < 0.0) throw config_error("bootstrap: threshold must be >= 0");

  const int s = alphabet.size();
  const std::size_t n = sequences.size();

  EdgeBootstrapResult result;
  result.alphabet = alphabet;
  result.params = options;
  result.observed = estimate(tally(sequences, alphabet), Scaling::stochastic);

  std::vector<std::pair<int, int>> edge_list;
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      if (result.observed.at(i, j) > 0.0) edge_list.emplace_back(i, j);

  // replicate-major storage keeps aggregation independent of thread order
  const std::size_t n_edges = edge_list.size();
  std::vector<double> replicate_weights(static_cast<std::size_t>(options.b) * n_edges, 0.0);
  parallel_for(options.b, options.threads, [&](int r) {
    Rng rng(derive_seed(options.seed, "bootstrap-replicate", static_cast<std::uint64_t>(r)));
    std::vector<std::size_t> index(n);
    for (auto& idx : index) idx = rng.below(n);
    const auto matrix = estimate_indexed(sequences, index, s);
    double* out = replicate_weights.data() + static_cast<std::size_t>(r) * n_edges;
    for (std::size_t e = 0; e < n_edges; ++e)
      out[e] = matrix[static_cast<std::size_t>(edge_list[e].first) * s + edge_list[e].second];
  });

  std::vector<double> weights(static_cast<std::size_t>(options.b));
  for (std::size_t e = 0; e < n_edges; ++e) {
    for (int r = 0; r < options.b; ++r)
      weights[static_cast<std::size_t>(r)] =
          replicate_weights[static_cast<std::size_t>(r) * n_edges + e];
    EdgeStat stat;
    stat.from = edge_list[e].first;
    stat.to = edge_list[e].second;
    stat.observed = result.observed.at(stat.from, stat.to);
    stat.boot_mean = mean(weights);
    stat.boot_sd = sample_sd(weights);
    stat.ci_low = quantile_type7(weights, options.alpha / 2.0);
    stat.ci_high = quantile_type7(weights, 1.0 - options.alpha / 2.0);
    int below = 0;
    for (double w : weights)
      if (w < options.threshold) ++below;
    stat.p_value = static_cast<double>(below) / static_cast<double>(options.b);
    stat.retained = options.rule == RetentionRule::threshold_p
                        ? stat.p_value <= options.alpha
                        : stat.ci_low >= options.threshold;
    result.edges.push_back(stat);
  }
  return result;
}

PermutationResult permutation_compare(std::span<const StateSequence> group_a,
                                      std::span<const StateSequence> group_b,
                                      const Alphabet& alphabet,
                                      const PermutationOptions& options) {
  if (group_a.empty() || group_b.empty())
    throw data_error("permutation: both groups must be non-empty");
  if (options.n_permutations < 1) throw config_error("permutation: n_permutations must be >= 1");

  const int s = alphabet.size();
  const std::size_t na = group_a.size(), nb = group_b.size();

  std::vector<StateSequence> pooled;
  pooled.reserve(na + nb);
  pooled.insert(pooled.end(), group_a.begin(), group_a.end());
  pooled.insert(pooled.end(), group_b.begin(), group_b.end());

  std::vector<std::size_t> all(na + nb);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto mat_a = estimate_indexed(pooled, std::span(all).subspan(0, na), s);
  const auto mat_b = estimate_indexed(pooled, std::span(all).subspan(na), s);

  const std::size_t n_cells = static_cast<std::size_t>(s) * s;
  std::vector<double> observed(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) observed[c] = mat_a[c] - mat_b[c];

  // per-permutation exceed flags, reduced in index order afterwards
  std::vector<unsigned char> exceed(static_cast<std::size_t>(options.n_permutations) * n_cells, 0);
  parallel_for(options.n_permutations, options.threads, [&](int r) {
    Rng rng(derive_seed(options.seed, "permutation", static_cast<std::uint64_t>(r)));
    std::vector<std::size_t> index(na + nb);
    std::iota(index.begin(), index.end(), std::size_t{0});
    rng.shuffle(index);
    const auto pa = estimate_indexed(pooled, std::span(index).subspan(0, na), s);
    const auto pb = estimate_indexed(pooled, std::span(index).subspan(na), s);
    unsigned char* out = exceed.data() + static_cast<std::size_t>(r) * n_cells;
    for (std::size_t c = 0; c < n_cells; ++c)
      out[c] = std::abs(pa[c] - pb[c]) >= std::abs(observed[c]) ? 1 : 0;
  });

  PermutationResult result;
  result.alphabet = alphabet;
  result.params = options;
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      const std::size_t c = static_cast<std::size_t>(i) * s + j;
      long count = 0;
      for (int r = 0; r < options.n_permutations; ++r)
        count += exceed[static_cast<std::size_t>(r) * n_cells + c];
      EdgeDiff diff;
      diff.from = i;
      diff.to = j;
      diff.observed_diff = observed[c];
      diff.p_value = (1.0 + static_cast<double>(count)) /
                     (static_cast<double>(options.n_permutations) + 1.0);
      result.edges.push_back(diff);
    }
  return result;
}

DisparityResult disparity_filter(const TransitionNetwork& net, double significance) {
  if (significance <= 0.0 || significance > 1.0)
    throw config_error("disparity: significance must be in (0,1]");
  const int s = net.size();
  const auto sout = out_strength(net);
  const auto sin = in_strength(net);
  std::vector<int> out_degree(static_cast<std::size_t>(s), 0);
  std::vector<int> in_degree(static_cast<std::size_t>(s), 0);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      if (i != j && net.weight(i, j) > 0.0) {
        ++out_degree[static_cast<std::size_t>(i)];
        ++in_degree[static_cast<std::size_t>(j)];
      }

  auto side_alpha = [](double w, double strength, int degree) {
    if (degree <= 1) return 0.0;  // a lone edge is always kept
    const double p = w / strength;
    return std::pow(1.0 - p, degree - 1);
  };

  DisparityResult result;
  result.alphabet = net.alphabet();
  result.significance = significance;
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      if (i == j || net.weight(i, j) <= 0.0) continue;
      DisparityEdge edge;
      edge.from = i;
      edge.to = j;
      edge.weight = net.weight(i, j);
      edge.alpha_source = side_alpha(edge.weight, sout[static_cast<std::size_t>(i)],
                                     out_degree[static_cast<std::size_t>(i)]);
      edge.alpha_target = side_alpha(edge.weight, sin[static_cast<std::size_t>(j)],
                                     in_degree[static_cast<std::size_t>(j)]);
      edge.alpha = std::min(edge.alpha_source, edge.alpha_target);
      edge.retained = edge.alpha < significance;
      result.edges.push_back(edge);
    }
  return result;
}

CentralityMeasure parse_measure(const std::string& name) {
  if (name == "in_strength") return CentralityMeasure::in_strength;
  if (name == "out_strength") return CentralityMeasure::out_strength;
  if (name == "betweenness") return CentralityMeasure::betweenness;
  throw config_error("unknown centrality measure \"" + name +
                     "\" (expected in_strength, out_strength, or betweenness)");
}

const char* measure_name(CentralityMeasure measure) {
  switch (measure) {
    case CentralityMeasure::in_strength: return "in_strength";
    case CentralityMeasure::out_strength: return "out_strength";
    case CentralityMeasure::betweenness: return "betweenness";
  }
  return "?";
}

namespace {

std::vector<double> measure_values(const TransitionModel& model, CentralityMeasure measure) {
  TransitionNetwork net{model};
  switch (measure) {
    case CentralityMeasure::in_strength: return in_strength(net);
    case CentralityMeasure::out_strength: return out_strength(net);
    case CentralityMeasure::betweenness: return betweenness_rw(net);
  }
  return {};
}

}  // namespace

StabilityResult centrality_stability(std::span<const StateSequence> sequences,
                                     const Alphabet& alphabet, CentralityMeasure measure,
                                     const StabilityOptions& options) {
  if (sequences.empty()) throw data_error("stability: no sequences");
  if (options.n_reps < 1) throw config_error("stability: n_reps must be >= 1");
  const std::size_t n = sequences.size();
  for (double prop : options.drop_proportions) {
    if (prop < 0.0 || prop >= 1.0)
      throw config_error("stability: drop proportions must be in [0,1)");
    const std::size_t kept = n - static_cast<std::size_t>(std::floor(prop * static_cast<double>(n)));
    if (kept < 2)
      throw data_error("stability: dropping " + std::to_string(prop) + " of " +
                       std::to_string(n) + " sequences leaves fewer than 2");
  }

  const auto full = measure_values(estimate(tally(sequences, alphabet)), measure);
  const int s = alphabet.size();

  StabilityResult result;
  result.measure = measure;
  result.params = options;
  result.drop_proportions = options.drop_proportions;

  const int n_props = static_cast<int>(options.drop_proportions.size());
  std::vector<double> correlations(static_cast<std::size_t>(n_props) * options.n_reps, 0.0);
  parallel_for(n_props * options.n_reps, options.threads, [&](int task) {
    const int pi = task / options.n_reps;
    const double prop = options.drop_proportions[static_cast<std::size_t>(pi)];
    const std::size_t kept = n - static_cast<std::size_t>(std::floor(prop * static_cast<double>(n)));
    Rng rng(derive_seed(options.seed, "stability", static_cast<std::uint64_t>(task)));
    std::vector<std::size_t> index(n);
    std::iota(index.begin(), index.end(), std::size_t{0});
    // partial Fisher-Yates: the first `kept` entries form the subsample
    for (std::size_t j = 0; j < kept; ++j) {
      const std::size_t pick = j + rng.below(n - j);
      std::swap(index[j], index[pick]);
    }
    std::vector<double> counts(static_cast<std::size_t>(s) * s, 0.0);
    std::vector<std::int64_t> initial(static_cast<std::size_t>(s), 0);
    TransitionModel sub;
    sub.alphabet = alphabet;
    sub.scaling = Scaling::stochastic;
    sub.matrix.assign(static_cast<std::size_t>(s) * s, 0.0);
    sub.initial.assign(static_cast<std::size_t>(s), 0.0);
    std::int64_t n_kept = 0;
    for (std::size_t j = 0; j < kept; ++j) {
      const auto& states = sequences[index[j]].states;
      ++initial[static_cast<std::size_t>(states.front())];
      ++n_kept;
      for (std::size_t t = 1; t < states.size(); ++t)
        counts[static_cast<std::size_t>(states[t - 1]) * s + states[t]] += 1.0;
    }
    for (int row = 0; row < s; ++row) {
      double total = 0.0;
      for (int j = 0; j < s; ++j) total += counts[static_cast<std::size_t>(row) * s + j];
      if (total <= 0.0) continue;
      for (int j = 0; j < s; ++j)
        sub.at(row, j) = counts[static_cast<std::size_t>(row) * s + j] / total;
    }
    for (int i = 0; i < s; ++i)
      sub.initial[static_cast<std::size_t>(i)] =
          static_cast<double>(initial[static_cast<std::size_t>(i)]) /
          static_cast<double>(n_kept);
    const auto values = measure_values(sub, measure);
    correlations[static_cast<std::size_t>(task)] = spearman(values, full);
  });

  for (int pi = 0; pi < n_props; ++pi) {
    std::span<const double> block(correlations.data() + static_cast<std::size_t>(pi) * options.n_reps,
                                  static_cast<std::size_t>(options.n_reps));
    result.mean_correlations.push_back(mean(block));
  }

  result.cs_coefficient = 0.0;
  for (int pi = 0; pi < n_props; ++pi)
    if (result.mean_correlations[static_cast<std::size_t>(pi)] >= 0.7)
      result.cs_coefficient =
          std::max(result.cs_coefficient, result.drop_proportions[static_cast<std::size_t>(pi)]);
  return result;
}

}  // namespace tna
