#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tna/graph.hpp"
#include "tna/markov.hpp"

namespace tna {

/// Mixture of first-order Markov models. Cluster membership priors follow a
/// multinomial logistic link on the covariates: cluster 1 is the reference
/// (coefficients fixed at zero) and beta holds one row per remaining
/// cluster, each of length d+1 (intercept first).
struct MixtureModel {
  int k = 1;
  Alphabet alphabet;
  std::vector<TransitionModel> components;   // k models, stochastic
  std::vector<std::string> covariate_names;  // d names; empty = intercept-only
  std::vector<double> beta;                  // (k-1) x (d+1), row-major

  /// Membership priors for one covariate vector z (length d).
  std::vector<double> priors(std::span<const double> z) const;
};

struct EmOptions {
  int restarts = 500;
  double tolerance = 1e-8;  // relative logL improvement
  int max_iterations = 1000;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
};

struct FitResult {
  MixtureModel model;
  double log_likelihood = 0.0;
  double bic = 0.0;
  long n_parameters = 0;
  int n_sequences = 0;
  std::vector<double> posteriors;  // n x k row-major, rows sum to 1
  int n_restarts = 0;
  int n_restarts_converged_to_best = 0;  // within 1e-4 of the best logL
  int n_restarts_degenerate = 0;
  int best_restart = -1;
  std::vector<double> trace;  // logL per iteration of the winning restart
};

/// Multi-restart EM. Each restart draws per-sequence responsibilities from a
/// symmetric Dirichlet(1), takes an M-step, then iterates E/M until the
/// relative logL improvement drops below tolerance. A restart whose smallest
/// cluster ends with posterior mass below one sequence-equivalent is
/// degenerate and discarded; if every restart degenerates the fit fails.
/// Restarts run in parallel on deterministic sub-seeds; the winner is the
/// best logL with ties broken by restart index.
FitResult fit_em(std::span<const StateSequence> sequences, const Alphabet& alphabet,
                 std::span<const std::string> covariate_names, int k,
                 const EmOptions& options = {});

struct BicRow {
  int k = 0;
  bool failed = false;
  double log_likelihood = 0.0;
  double bic = 0.0;
  long n_parameters = 0;
  int n_restarts_converged = 0;
};

struct SelectKResult {
  FitResult best;
  int best_k = 0;
  std::vector<BicRow> table;  // in ascending-k order; failed fits recorded
};

/// Fits every k in [k_min, k_max] and keeps the lowest-BIC fit. Failed fits
/// stay in the table but are excluded from the argmin.
SelectKResult select_k(std::span<const StateSequence> sequences, const Alphabet& alphabet,
                       std::span<const std::string> covariate_names, int k_min, int k_max,
                       const EmOptions& options = {});

struct CovariateRow {
  int cluster = 0;  // 1-based; cluster 1 (reference) is omitted
  std::string variable;
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;   // estimate - 1.96 se
  double ci_high = 0.0;  // estimate + 1.96 se
  double t = 0.0;        // estimate / se
  double p = 0.0;        // two-sided, standard normal reference
};

struct CovariateInference {
  std::vector<CovariateRow> rows;
};

/// Standard errors from the observed information of the mixture
/// log-likelihood with respect to beta (components held fixed), via a
/// central-difference Hessian with step 1e-5 * max(1, |beta|). Requires a
/// fit with covariates and k >= 2.
CovariateInference covariate_inference(const FitResult& fit,
                                       std::span<const StateSequence> sequences);

/// One TransitionNetwork per mixture component.
std::vector<TransitionNetwork> cluster_networks(const FitResult& fit);

/// Mixture log-likelihood of the data under a fixed model (no fitting).
double mixture_log_likelihood(const MixtureModel& model,
                              std::span<const StateSequence> sequences);

/// Free-parameter count used in BIC: (k-1)(d+1) membership coefficients plus
/// per-component initial and row simplexes, with structurally-zero cells
/// excluded (a cell estimated at exactly zero is not a free parameter).
long count_parameters(const MixtureModel& model);

}  // namespace tna
