#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "tna/errors.hpp"
#include "tna/markov.hpp"
#include "tna/mixture.hpp"
#include "tna/rng.hpp"

using namespace tna;

namespace {

const Alphabet kABC = Alphabet::from_labels({"A", "B", "C"});

// two well-separated components: opposite 0.9-cycles over three states
TransitionModel planted_component(int which) {
  if (which == 0)
    return oracle::model_from_rows({"A", "B", "C"}, {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                   {{0.05, 0.90, 0.05},
                                    {0.05, 0.05, 0.90},
                                    {0.90, 0.05, 0.05}});
  return oracle::model_from_rows({"A", "B", "C"}, {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                 {{0.05, 0.05, 0.90},
                                  {0.90, 0.05, 0.05},
                                  {0.05, 0.90, 0.05}});
}

struct PlantedData {
  std::vector<StateSequence> sequences;
  std::vector<int> truth;  // planted component per sequence
};

PlantedData planted_mixture(int n_per_component, int length, std::uint64_t seed) {
  PlantedData data;
  for (int component = 0; component < 2; ++component) {
    auto draws = simulate(planted_component(component), n_per_component, length,
                          seed + static_cast<std::uint64_t>(component));
    for (auto& seq : draws) {
      seq.unit = "c" + std::to_string(component) + "_" + seq.unit;
      data.sequences.push_back(std::move(seq));
      data.truth.push_back(component);
    }
  }
  return data;
}

// fraction of sequences whose hard assignment matches the planted component,
// maximized over the two label orders
double assignment_accuracy(const FitResult& fit, const std::vector<int>& truth) {
  const int k = fit.model.k;
  long direct = 0, swapped = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    int best = 0;
    for (int c = 1; c < k; ++c)
      if (fit.posteriors[i * static_cast<std::size_t>(k) + c] >
          fit.posteriors[i * static_cast<std::size_t>(k) + best])
        best = c;
    if (best == truth[i]) ++direct;
    if (best == 1 - truth[i]) ++swapped;
  }
  return static_cast<double>(std::max(direct, swapped)) / static_cast<double>(truth.size());
}

}  // namespace

TEST_CASE("k=1 fit collapses to the pooled single-Markov estimate") {
  Rng rng(2);
  const auto sequences = simulate(oracle::random_stochastic(3, rng), 60, 20, 5);
  EmOptions options;
  options.restarts = 3;
  options.seed = 10;
  const auto fit = fit_em(sequences, kABC, {}, 1, options);

  const auto pooled = estimate(tally(sequences, kABC));
  CHECK(oracle::l_inf(fit.model.components[0].matrix, pooled.matrix) < 1e-12);
  CHECK(oracle::l_inf(fit.model.components[0].initial, pooled.initial) < 1e-12);
  CHECK(fit.log_likelihood ==
        doctest::Approx(log_likelihood(pooled, sequences)).epsilon(1e-9));
  // single-component networks reproduce the pooled estimate
  const auto nets = cluster_networks(fit);
  REQUIRE(nets.size() == 1);
  CHECK(oracle::l_inf(nets[0].model.matrix, pooled.matrix) < 1e-12);
}

TEST_CASE("EM log-likelihood trace never decreases") {
  Rng rng(33);
  for (int rep = 0; rep < 30; ++rep) {
    const auto sequences = oracle::random_sequences(25, 12, 3, rng);
    EmOptions options;
    options.restarts = 2;
    options.seed = 100 + static_cast<std::uint64_t>(rep);
    options.max_iterations = 200;
    const auto fit = fit_em(sequences, kABC, {}, 2, options);
    for (std::size_t t = 1; t < fit.trace.size(); ++t)
      CHECK(fit.trace[t] >=
            fit.trace[t - 1] - 1e-9 * std::max(1.0, std::abs(fit.trace[t - 1])));
  }
}

TEST_CASE("planted two-component mixture is recovered") {
  const auto data = planted_mixture(150, 40, 77);
  EmOptions options;
  options.restarts = 20;
  options.seed = 42;
  const auto fit = fit_em(data.sequences, kABC, {}, 2, options);

  CHECK(assignment_accuracy(fit, data.truth) >= 0.95);

  // per-component matrices within L_inf 0.05 of the planted truth (either order)
  const auto truth0 = planted_component(0).matrix;
  const auto truth1 = planted_component(1).matrix;
  const auto& est0 = fit.model.components[0].matrix;
  const auto& est1 = fit.model.components[1].matrix;
  const double direct = std::max(oracle::l_inf(est0, truth0), oracle::l_inf(est1, truth1));
  const double swapped = std::max(oracle::l_inf(est0, truth1), oracle::l_inf(est1, truth0));
  CHECK(std::min(direct, swapped) <= 0.05);

  // posteriors are proper distributions
  for (std::size_t i = 0; i < data.sequences.size(); ++i) {
    double total = 0.0;
    for (int c = 0; c < 2; ++c) total += fit.posteriors[i * 2 + c];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("more clusters than the data supports fails after degenerate restarts") {
  std::vector<StateSequence> sequences;
  for (int i = 0; i < 2; ++i) {
    StateSequence seq;
    seq.unit = "u" + std::to_string(i);
    seq.states = {0, 1, 2, 0, 1};
    sequences.push_back(seq);
  }
  EmOptions options;
  options.restarts = 5;
  options.seed = 9;
  CHECK_THROWS_WITH_AS(fit_em(sequences, kABC, {}, 3, options), doctest::Contains("failed"),
                       data_error);
}

TEST_CASE("fits are deterministic for a fixed seed and thread-count independent") {
  const auto data = planted_mixture(40, 20, 3);
  EmOptions options;
  options.restarts = 6;
  options.seed = 55;
  options.threads = 1;
  const auto serial = fit_em(data.sequences, kABC, {}, 2, options);
  options.threads = 3;
  const auto parallel = fit_em(data.sequences, kABC, {}, 2, options);
  CHECK(serial.log_likelihood == parallel.log_likelihood);
  CHECK(serial.best_restart == parallel.best_restart);
  CHECK(serial.model.beta == parallel.model.beta);
  CHECK(serial.model.components[0].matrix == parallel.model.components[0].matrix);
}

TEST_CASE("label permutation leaves logL and BIC unchanged") {
  const auto data = planted_mixture(50, 25, 8);
  EmOptions options;
  options.restarts = 8;
  options.seed = 21;
  const auto fit = fit_em(data.sequences, kABC, {}, 2, options);

  MixtureModel permuted = fit.model;
  std::swap(permuted.components[0], permuted.components[1]);
  // swapping cluster 1 and 2 re-bases the logistic prior: beta' = -beta
  for (auto& b : permuted.beta) b = -b;

  const double logl = mixture_log_likelihood(permuted, data.sequences);
  CHECK(logl == doctest::Approx(fit.log_likelihood).epsilon(1e-10));
  CHECK(count_parameters(permuted) == fit.n_parameters);
}

TEST_CASE("softmax priors sum to one for every covariate vector") {
  MixtureModel model;
  model.k = 3;
  model.alphabet = kABC;
  model.covariate_names = {"x", "y"};
  model.beta = {0.5, -1.0, 2.0, -0.3, 0.7, 0.1};
  Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const std::vector<double> z{rng.normal() * 3.0, rng.normal() * 3.0};
    const auto priors = model.priors(z);
    double total = 0.0;
    for (double p : priors) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("parameter count matches an independent canonical-minus-zeros count") {
  const auto data = planted_mixture(60, 25, 15);
  EmOptions options;
  options.restarts = 5;
  options.seed = 12;
  const auto fit = fit_em(data.sequences, kABC, {}, 2, options);

  const int s = kABC.size();
  const int k = fit.model.k;
  const int dim = static_cast<int>(fit.model.covariate_names.size()) + 1;
  long canonical = static_cast<long>(k - 1) * dim + static_cast<long>(k) * (s - 1) +
                   static_cast<long>(k) * s * (s - 1);
  long decrement = 0;
  for (const auto& comp : fit.model.components) {
    int init_zeros = 0;
    for (double v : comp.initial)
      if (v == 0.0) ++init_zeros;
    decrement += (init_zeros == s) ? (s - 1) : init_zeros;
    for (int i = 0; i < s; ++i) {
      int row_zeros = 0;
      for (int j = 0; j < s; ++j)
        if (comp.at(i, j) == 0.0) ++row_zeros;
      decrement += (row_zeros == s) ? (s - 1) : row_zeros;
    }
  }
  CHECK(fit.n_parameters == canonical - decrement);
  CHECK(fit.bic == doctest::Approx(-2.0 * fit.log_likelihood +
                                   static_cast<double>(fit.n_parameters) *
                                       std::log(static_cast<double>(fit.n_sequences))));
}

TEST_CASE("select_k") {
  SUBCASE("planted two components win the BIC race") {
    const auto data = planted_mixture(100, 30, 19);
    EmOptions options;
    options.restarts = 10;
    options.seed = 31;
    const auto selection = select_k(data.sequences, kABC, {}, 1, 3, options);
    CHECK(selection.best_k == 2);
    CHECK(selection.table.size() == 3);
    for (const auto& row : selection.table) CHECK(!row.failed);
    CHECK(selection.table[1].bic < selection.table[0].bic);
    CHECK(selection.table[1].bic < selection.table[2].bic);
  }
  SUBCASE("k range of {1} returns the k=1 fit") {
    Rng rng(6);
    const auto sequences = simulate(oracle::random_stochastic(3, rng), 30, 15, 2);
    const auto selection = select_k(sequences, kABC, {}, 1, 1, {});
    CHECK(selection.best_k == 1);
    CHECK(selection.best.model.k == 1);
  }
  SUBCASE("unsupportable k values are recorded as failed, argmin skips them") {
    const auto data = planted_mixture(4, 25, 23);  // 8 sequences total
    EmOptions options;
    options.restarts = 4;
    options.seed = 14;
    const auto selection = select_k(data.sequences, kABC, {}, 2, 8, options);
    bool any_failed = false;
    for (const auto& row : selection.table) any_failed |= row.failed;
    CHECK(any_failed);
    CHECK(selection.best_k >= 2);
  }
}

TEST_CASE("covariates shift cluster membership and the inference table is consistent") {
  // membership prior follows a logistic in x with slope 2
  std::vector<StateSequence> sequences;
  std::vector<int> truth;
  Rng rng(70);
  int counter = 0;
  for (int i = 0; i < 250; ++i) {
    const double x = rng.normal();
    const double p2 = 1.0 / (1.0 + std::exp(-2.0 * x));
    const int component = rng.uniform() < p2 ? 1 : 0;
    auto draws = simulate(planted_component(component), 1, 30,
                          1000 + static_cast<std::uint64_t>(counter++));
    draws[0].unit = "u" + std::to_string(i);
    draws[0].covariates["x"] = x;
    sequences.push_back(std::move(draws[0]));
    truth.push_back(component);
  }

  EmOptions options;
  options.restarts = 12;
  options.seed = 5;
  const std::vector<std::string> covariates{"x"};
  const auto fit = fit_em(sequences, kABC, covariates, 2, options);
  CHECK(assignment_accuracy(fit, truth) >= 0.95);

  const auto inference = covariate_inference(fit, sequences);
  REQUIRE(inference.rows.size() == 2);  // (intercept) and x for cluster 2
  const auto& slope = inference.rows[1];
  CHECK(slope.variable == "x");
  // strong true effect: significant, and the CI/t/p columns are arithmetic
  // transforms of estimate and SE
  CHECK(std::abs(slope.t) > 1.96);
  CHECK(std::abs(slope.estimate) > 1.0);
  CHECK(slope.ci_low == doctest::Approx(slope.estimate - 1.96 * slope.se).epsilon(1e-12));
  CHECK(slope.ci_high == doctest::Approx(slope.estimate + 1.96 * slope.se).epsilon(1e-12));
  CHECK(slope.t == doctest::Approx(slope.estimate / slope.se).epsilon(1e-12));
  CHECK(slope.p >= 0.0);
  CHECK(slope.p <= 1.0);
}

TEST_CASE("planted membership coefficients are recovered with k=3 and two covariates") {
  // memberships generated from softmax(beta * z) with known beta; the fitted
  // beta should land near the generator (cluster 1 is the reference on both
  // sides, so the parametrization matches up to cluster labeling)
  const Alphabet abcd = Alphabet::from_labels({"A", "B", "C", "D"});
  auto component = [&](int which) {
    std::vector<std::vector<double>> rows(4, std::vector<double>(4, 0.05));
    for (int i = 0; i < 4; ++i) rows[static_cast<std::size_t>(i)][static_cast<std::size_t>((i + 1 + which) % 4)] = 0.85;
    return oracle::model_from_rows({"A", "B", "C", "D"}, {0.25, 0.25, 0.25, 0.25}, rows);
  };
  // beta rows for clusters 2 and 3: intercept, x1, x2
  const std::vector<double> truth_beta{0.5, 1.5, 0.0, -0.5, 0.0, 1.5};

  std::vector<StateSequence> sequences;
  Rng rng(4242);
  for (int i = 0; i < 600; ++i) {
    const double x1 = rng.normal(), x2 = rng.normal();
    const double u2 = truth_beta[0] + truth_beta[1] * x1 + truth_beta[2] * x2;
    const double u3 = truth_beta[3] + truth_beta[4] * x1 + truth_beta[5] * x2;
    const std::vector<double> weights{1.0, std::exp(u2), std::exp(u3)};
    const int cluster = rng.categorical(weights);
    auto draws = simulate(component(cluster), 1, 30,
                          derive_seed(5, "beta-rec", static_cast<std::uint64_t>(i)));
    draws[0].unit = "u" + std::to_string(i);
    draws[0].covariates["x1"] = x1;
    draws[0].covariates["x2"] = x2;
    sequences.push_back(std::move(draws[0]));
  }

  EmOptions options;
  options.restarts = 15;
  options.seed = 7;
  const std::vector<std::string> covariates{"x1", "x2"};
  const auto fit = fit_em(sequences, abcd, covariates, 3, options);

  // identify which fitted cluster is which planted component by the
  // transition matrices, then rebase beta to planted-cluster order
  std::vector<int> to_planted(3, -1);
  for (int c = 0; c < 3; ++c) {
    double best = 1e9;
    for (int p = 0; p < 3; ++p) {
      const double err = oracle::l_inf(fit.model.components[static_cast<std::size_t>(c)].matrix,
                                       component(p).matrix);
      if (err < best) {
        best = err;
        to_planted[static_cast<std::size_t>(c)] = p;
      }
    }
    CHECK(best <= 0.08);
  }
  // fitted log-odds of cluster c vs cluster c0 (the one matching planted 0)
  auto fitted_row = [&](int c) {
    std::vector<double> row(3, 0.0);  // intercept, x1, x2
    if (c > 0)
      for (int j = 0; j < 3; ++j) row[static_cast<std::size_t>(j)] = fit.model.beta[static_cast<std::size_t>((c - 1) * 3 + j)];
    return row;
  };
  int c0 = 0;
  for (int c = 0; c < 3; ++c)
    if (to_planted[static_cast<std::size_t>(c)] == 0) c0 = c;
  for (int c = 0; c < 3; ++c) {
    const int planted = to_planted[static_cast<std::size_t>(c)];
    if (planted == 0) continue;
    const auto row = fitted_row(c);
    const auto base = fitted_row(c0);
    for (int j = 0; j < 3; ++j) {
      const double rebased = row[static_cast<std::size_t>(j)] - base[static_cast<std::size_t>(j)];
      const double want = truth_beta[static_cast<std::size_t>((planted - 1) * 3 + j)];
      CHECK(std::abs(rebased - want) < 0.5);
    }
  }

  // inference table covers (k-1)(d+1) = 6 coefficients with sane arithmetic
  const auto inference = covariate_inference(fit, sequences);
  REQUIRE(inference.rows.size() == 6);
  for (const auto& row : inference.rows) {
    CHECK(row.se > 0.0);
    CHECK(row.ci_low == doctest::Approx(row.estimate - 1.96 * row.se));
    CHECK(row.t == doctest::Approx(row.estimate / row.se));
  }
}

TEST_CASE("a null covariate rarely looks significant") {
  int quiet = 0;
  const int reps = 10;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<StateSequence> sequences;
    Rng rng(900 + static_cast<std::uint64_t>(rep));
    for (int i = 0; i < 120; ++i) {
      const int component = static_cast<int>(rng.below(2));
      auto draws =
          simulate(planted_component(component), 1, 25,
                   derive_seed(77, "null-cov", static_cast<std::uint64_t>(rep * 1000 + i)));
      draws[0].unit = "u" + std::to_string(i);
      draws[0].covariates["x"] = rng.normal();  // no relation to the component
      sequences.push_back(std::move(draws[0]));
    }
    EmOptions options;
    options.restarts = 6;
    options.seed = 300 + static_cast<std::uint64_t>(rep);
    const std::vector<std::string> covariates{"x"};
    const auto fit = fit_em(sequences, kABC, covariates, 2, options);
    const auto inference = covariate_inference(fit, sequences);
    if (std::abs(inference.rows[1].t) < 1.96) ++quiet;
  }
  CHECK(quiet >= 9);  // >= 90% of replications
}

TEST_CASE("perfect separation leads to a singular information matrix") {
  std::vector<StateSequence> sequences;
  for (int component = 0; component < 2; ++component) {
    auto draws = simulate(planted_component(component), 30, 30,
                          40 + static_cast<std::uint64_t>(component));
    for (auto& seq : draws) {
      seq.unit = "c" + std::to_string(component) + seq.unit;
      seq.covariates["x"] = component == 0 ? -1.0 : 1.0;  // separates exactly
      sequences.push_back(std::move(seq));
    }
  }
  EmOptions options;
  options.restarts = 4;
  options.seed = 17;
  const std::vector<std::string> covariates{"x"};
  const auto fit = fit_em(sequences, kABC, covariates, 2, options);
  CHECK_THROWS_AS(covariate_inference(fit, sequences), numeric_error);
}

TEST_CASE("covariate inference preconditions") {
  const auto data = planted_mixture(30, 20, 26);
  EmOptions options;
  options.restarts = 3;
  options.seed = 2;
  const auto fit = fit_em(data.sequences, kABC, {}, 2, options);
  CHECK_THROWS_AS(covariate_inference(fit, data.sequences), config_error);  // no covariates
  const auto k1 = fit_em(data.sequences, kABC, {}, 1, options);
  CHECK_THROWS_AS(covariate_inference(k1, data.sequences), config_error);  // k < 2
}
