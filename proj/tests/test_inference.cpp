#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tna/errors.hpp"
#include "tna/inference.hpp"
#include "tna/markov.hpp"
#include "tna/rng.hpp"

using namespace tna;

namespace {

// 4 states, exactly 5 strong edges (>= 0.3) and 5 rare edges (= 0.01)
TransitionModel strong_and_rare_model() {
  return oracle::model_from_rows(
      {"A", "B", "C", "D"}, {0.25, 0.25, 0.25, 0.25},
      {{0.00, 0.99, 0.01, 0.00},
       {0.00, 0.00, 0.99, 0.01},
       {0.495, 0.01, 0.00, 0.495},
       {0.98, 0.01, 0.01, 0.00}});
}

}  // namespace

TEST_CASE("bootstrap keeps strong edges and drops rare ones") {
  const auto truth = strong_and_rare_model();
  const auto sequences = simulate(truth, 400, 30, 11);

  BootstrapOptions options;
  options.b = 400;
  options.seed = 5;
  const auto result = bootstrap_edges(sequences, truth.alphabet, options);

  int strong_retained = 0, strong_total = 0, rare_dropped = 0, rare_total = 0;
  for (const auto& edge : result.edges) {
    const double w = truth.at(edge.from, edge.to);
    if (w >= 0.3) {
      ++strong_total;
      if (edge.retained) ++strong_retained;
      CHECK(edge.p_value <= options.alpha);
      CHECK(edge.ci_low <= edge.observed);
      CHECK(edge.observed <= edge.ci_high);
    } else if (w > 0.0 && w <= 0.01) {
      ++rare_total;
      if (!edge.retained) ++rare_dropped;
    }
    CHECK(edge.ci_low <= edge.ci_high);
    CHECK(edge.boot_mean >= 0.0);
  }
  CHECK(strong_total == 5);
  CHECK(strong_retained == 5);
  CHECK(rare_dropped == rare_total);
}

TEST_CASE("bootstrap is byte-deterministic under a fixed seed") {
  const auto truth = strong_and_rare_model();
  const auto sequences = simulate(truth, 100, 20, 3);
  BootstrapOptions options;
  options.b = 150;
  options.seed = 42;
  options.threads = 1;
  const auto a = bootstrap_edges(sequences, truth.alphabet, options);
  options.threads = 3;
  const auto b = bootstrap_edges(sequences, truth.alphabet, options);
  REQUIRE(a.edges.size() == b.edges.size());
  for (std::size_t i = 0; i < a.edges.size(); ++i) {
    CHECK(a.edges[i].boot_mean == b.edges[i].boot_mean);
    CHECK(a.edges[i].ci_low == b.edges[i].ci_low);
    CHECK(a.edges[i].p_value == b.edges[i].p_value);
    CHECK(a.edges[i].retained == b.edges[i].retained);
  }
}

TEST_CASE("bootstrap preconditions") {
  const auto truth = strong_and_rare_model();
  const auto sequences = simulate(truth, 10, 10, 1);
  SUBCASE("alpha below 1/B") {
    BootstrapOptions options;
    options.b = 100;
    options.alpha = 0.005;
    CHECK_THROWS_WITH_AS(bootstrap_edges(sequences, truth.alphabet, options),
                         doctest::Contains("alpha"), config_error);
  }
  SUBCASE("B under 100") {
    BootstrapOptions options;
    options.b = 50;
    CHECK_THROWS_AS(bootstrap_edges(sequences, truth.alphabet, options), config_error);
  }
  SUBCASE("fewer than 2 sequences") {
    const std::vector<StateSequence> one(sequences.begin(), sequences.begin() + 1);
    CHECK_THROWS_AS(bootstrap_edges(one, truth.alphabet, {}), data_error);
  }
}

TEST_CASE("ci_lower retention rule") {
  const auto truth = strong_and_rare_model();
  const auto sequences = simulate(truth, 400, 30, 7);
  BootstrapOptions options;
  options.b = 200;
  options.rule = RetentionRule::ci_lower;
  options.seed = 2;
  const auto result = bootstrap_edges(sequences, truth.alphabet, options);
  for (const auto& edge : result.edges)
    CHECK(edge.retained == (edge.ci_low >= options.threshold));
}

TEST_CASE("permutation comparison") {
  Rng rng(19);
  const auto model = oracle::random_stochastic(3, rng, 3.0);

  SUBCASE("identical groups: all observed differences 0, all p = 1") {
    const auto group = simulate(model, 50, 15, 23);
    PermutationOptions options;
    options.n_permutations = 200;
    options.seed = 4;
    const auto result = permutation_compare(group, group, model.alphabet, options);
    for (const auto& edge : result.edges) {
      CHECK(edge.observed_diff == 0.0);
      CHECK(edge.p_value == doctest::Approx(1.0));
    }
  }
  SUBCASE("planted difference on one edge is detected") {
    auto shifted = model;
    // move 0.3 of mass within row 0: bump (0,1), shrink (0,2)
    const double bump = 0.3;
    shifted.at(0, 1) += bump;
    shifted.at(0, 2) -= bump;
    REQUIRE(shifted.at(0, 2) > 0.0);
    const auto group_a = simulate(model, 200, 20, 31);
    const auto group_b = simulate(shifted, 200, 20, 32);
    PermutationOptions options;
    options.n_permutations = 1000;
    options.seed = 9;
    const auto result = permutation_compare(group_a, group_b, model.alphabet, options);
    for (const auto& edge : result.edges) {
      if (edge.from == 0 && edge.to == 1) {
        CHECK(edge.p_value < 0.01);
        CHECK(edge.observed_diff < -0.2);  // group A has the smaller weight
      }
      CHECK(edge.p_value >= 1.0 / (options.n_permutations + 1.0));
      CHECK(edge.p_value <= 1.0);
    }
  }
  SUBCASE("empty group errors") {
    const auto group = simulate(model, 5, 10, 2);
    CHECK_THROWS_AS(permutation_compare(group, {}, model.alphabet, {}), data_error);
  }
}

TEST_CASE("disparity filter closed forms") {
  SUBCASE("five equal outgoing weights: alpha = 0.8^4 to 10 significant digits") {
    // out-edges from A split equally; targets have several incoming edges so
    // the target side does not force retention
    std::vector<std::vector<double>> rows(6, std::vector<double>(6, 0.0));
    for (int j = 1; j <= 5; ++j) rows[0][static_cast<std::size_t>(j)] = 0.2;
    // give every target a second and third incoming edge of the same size
    for (int j = 1; j <= 5; ++j) {
      rows[static_cast<std::size_t>(j == 1 ? 2 : 1)][static_cast<std::size_t>(j)] = 0.2;
      rows[static_cast<std::size_t>(j == 2 ? 3 : 2)][static_cast<std::size_t>(j)] = 0.2;
    }
    auto model = oracle::model_from_rows({"A", "B", "C", "D", "E", "F"},
                                         {1, 0, 0, 0, 0, 0}, rows);
    model.scaling = Scaling::count;  // weights need not be row-stochastic here
    const auto result = disparity_filter(TransitionNetwork{model}, 0.05);
    for (const auto& edge : result.edges) {
      if (edge.from != 0) continue;
      CHECK(std::abs(edge.alpha_source - 0.4096) < 0.4096 * 1e-10);
      CHECK(!edge.retained);
    }
  }
  SUBCASE("dominant 0.9 edge among five: alpha = 0.1^4, retained") {
    std::vector<std::vector<double>> rows(6, std::vector<double>(6, 0.0));
    rows[0][1] = 0.9;
    rows[0][2] = 0.025;
    rows[0][3] = 0.025;
    rows[0][4] = 0.025;
    rows[0][5] = 0.025;
    const auto model = oracle::model_from_rows({"A", "B", "C", "D", "E", "F"},
                                               {1, 0, 0, 0, 0, 0}, rows);
    const auto result = disparity_filter(TransitionNetwork{model}, 0.05);
    bool found = false;
    for (const auto& edge : result.edges) {
      if (edge.from == 0 && edge.to == 1) {
        found = true;
        CHECK(std::abs(edge.alpha_source - 1e-4) < 1e-4 * 1e-10);
        CHECK(edge.retained);
      }
    }
    CHECK(found);
  }
  SUBCASE("an out-degree-1 edge is always retained") {
    const auto model = oracle::model_from_rows({"A", "B"}, {1.0, 0.0},
                                               {{0.0, 1.0}, {0.0, 0.0}});
    const auto result = disparity_filter(TransitionNetwork{model}, 0.05);
    REQUIRE(result.edges.size() == 1);
    CHECK(result.edges[0].alpha == 0.0);
    CHECK(result.edges[0].retained);
  }
}

TEST_CASE("disparity alpha is monotone in p and k") {
  // (1-p)^(k-1) falls as p grows with k fixed, and as k grows with p > 0 fixed
  auto alpha_of = [](double p, int k) { return std::pow(1.0 - p, k - 1); };
  for (int k = 2; k <= 8; ++k)
    for (double p = 0.05; p < 0.9; p += 0.05)
      CHECK(alpha_of(p + 0.05, k) < alpha_of(p, k));
  for (double p = 0.05; p < 0.95; p += 0.05)
    for (int k = 2; k < 8; ++k) CHECK(alpha_of(p, k + 1) < alpha_of(p, k));

  // and the implementation agrees with the closed form on a random network
  Rng rng(55);
  const auto model = oracle::random_stochastic(6, rng);
  const auto result = disparity_filter(TransitionNetwork{model}, 0.05);
  const TransitionNetwork net{model};
  const auto sout = out_strength(net);
  for (const auto& edge : result.edges) {
    int degree = 0;
    for (int j = 0; j < 6; ++j)
      if (j != edge.from && model.at(edge.from, j) > 0.0) ++degree;
    const double expect =
        degree <= 1 ? 0.0
                    : std::pow(1.0 - edge.weight / sout[static_cast<std::size_t>(edge.from)],
                               degree - 1);
    CHECK(edge.alpha_source == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("centrality stability") {
  Rng rng(66);
  const auto model = oracle::random_stochastic(4, rng, 0.8);
  const auto sequences = simulate(model, 300, 25, 13);

  SUBCASE("dropping nothing correlates exactly 1") {
    StabilityOptions options;
    options.drop_proportions = {0.0};
    options.n_reps = 5;
    options.seed = 3;
    const auto result =
        centrality_stability(sequences, model.alphabet, CentralityMeasure::in_strength, options);
    CHECK(result.mean_correlations[0] == doctest::Approx(1.0));
    CHECK(result.cs_coefficient == 0.0);  // reported over requested proportions only
  }
  SUBCASE("abundant data is stable: CS-coefficient at least 0.5") {
    StabilityOptions options;
    options.n_reps = 40;
    options.seed = 21;
    const auto result =
        centrality_stability(sequences, model.alphabet, CentralityMeasure::in_strength, options);
    CHECK(result.cs_coefficient >= 0.5);
    // mean correlations are reported per drop proportion
    CHECK(result.mean_correlations.size() == options.drop_proportions.size());
    for (double c : result.mean_correlations) {
      CHECK(c >= -1.0);
      CHECK(c <= 1.0);
    }
  }
  SUBCASE("3 sequences with drop 0.7 violates the precondition") {
    const std::vector<StateSequence> tiny(sequences.begin(), sequences.begin() + 3);
    StabilityOptions options;
    options.drop_proportions = {0.7};
    CHECK_THROWS_AS(
        centrality_stability(tiny, model.alphabet, CentralityMeasure::in_strength, options),
        data_error);
  }
  SUBCASE("unknown measure errors listing the valid ones") {
    CHECK_THROWS_WITH_AS(parse_measure("pagerank"), doctest::Contains("in_strength"),
                         config_error);
  }
  SUBCASE("stability works for betweenness too") {
    StabilityOptions options;
    options.drop_proportions = {0.1, 0.3};
    options.n_reps = 10;
    options.seed = 8;
    const auto result = centrality_stability(sequences, model.alphabet,
                                             CentralityMeasure::betweenness, options);
    CHECK(result.mean_correlations.size() == 2);
  }
}

TEST_CASE("null permutation p-values are super-uniform") {
  Rng rng(44);
  const auto model = oracle::random_stochastic(3, rng, 3.0);
  std::vector<double> p_values;
  for (int rep = 0; rep < 10; ++rep) {
    const auto a = simulate(model, 60, 15, derive_seed(88, "ksa", static_cast<std::uint64_t>(rep)));
    const auto b = simulate(model, 60, 15, derive_seed(88, "ksb", static_cast<std::uint64_t>(rep)));
    PermutationOptions options;
    options.n_permutations = 400;
    options.seed = derive_seed(88, "ksperm", static_cast<std::uint64_t>(rep));
    const auto result = permutation_compare(a, b, model.alphabet, options);
    for (const auto& edge : result.edges) p_values.push_back(edge.p_value);
  }
  // super-uniform: the empirical CDF never rises much above the diagonal
  // (one-sided KS distance within Monte Carlo tolerance for 90 samples)
  const double n = static_cast<double>(p_values.size());
  for (double t = 0.05; t <= 1.0; t += 0.05) {
    double cdf = 0.0;
    for (double p : p_values)
      if (p <= t) cdf += 1.0;
    cdf /= n;
    CHECK(cdf <= t + 1.5 / std::sqrt(n));
  }
}

TEST_CASE("bootstrap p-value tends to zero for a clearly strong edge") {
  const auto truth = strong_and_rare_model();
  const auto sequences = simulate(truth, 500, 30, 17);
  BootstrapOptions options;
  options.b = 2000;
  options.seed = 77;
  const auto result = bootstrap_edges(sequences, truth.alphabet, options);
  for (const auto& edge : result.edges)
    if (truth.at(edge.from, edge.to) >= 0.3) CHECK(edge.p_value == 0.0);
}
