#include "tna/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tna/errors.hpp"
#include "tna/linalg.hpp"
#include "tna/parallel.hpp"
#include "tna/rng.hpp"
#include "tna/stats.hpp"

namespace tna {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-sequence sufficient statistics: first state, sparse transition counts
// (flat index from*S+to), and the design row [1, covariates...]. EM cost is
// then independent of sequence length.
struct SeqStat {
  int first = 0;
  std::vector<std::pair<int, double>> transitions;
  std::vector<double> z;
};

std::vector<SeqStat> prepare_stats(std::span<const StateSequence> sequences,
                                   const Alphabet& alphabet,
                                   std::span<const std::string> covariate_names) {
  if (sequences.empty()) throw data_error("mixture: no sequences");
  const int s = alphabet.size();
  std::vector<SeqStat> stats;
  stats.reserve(sequences.size());
  std::vector<double> scratch(static_cast<std::size_t>(s) * s, 0.0);
  for (const auto& seq : sequences) {
    if (seq.states.empty()) throw data_error("mixture: empty sequence in unit " + seq.unit);
    SeqStat st;
    st.first = seq.states.front();
    for (int state : seq.states)
      if (state < 0 || state >= s)
        throw data_error("mixture: state index out of range in unit " + seq.unit);
    for (std::size_t t = 1; t < seq.states.size(); ++t)
      scratch[static_cast<std::size_t>(seq.states[t - 1]) * s + seq.states[t]] += 1.0;
    for (std::size_t idx = 0; idx < scratch.size(); ++idx) {
      if (scratch[idx] > 0.0) {
        st.transitions.emplace_back(static_cast<int>(idx), scratch[idx]);
        scratch[idx] = 0.0;
      }
    }
    st.z.push_back(1.0);
    for (const auto& name : covariate_names) {
      auto it = seq.covariates.find(name);
      if (it == seq.covariates.end())
        throw data_error("mixture: unit \"" + seq.unit + "\" lacks covariate \"" + name + "\"");
      st.z.push_back(it->second);
    }
    stats.push_back(std::move(st));
  }
  return stats;
}

// log initial / log matrix per component; log(0) = -inf is intended.
struct LogTables {
  std::vector<double> log_init;  // k x S
  std::vector<double> log_mat;   // k x S*S
};

LogTables log_tables(const std::vector<TransitionModel>& components) {
  LogTables t;
  const int k = static_cast<int>(components.size());
  const int s = components.front().size();
  t.log_init.assign(static_cast<std::size_t>(k) * s, kNegInf);
  t.log_mat.assign(static_cast<std::size_t>(k) * s * s, kNegInf);
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < s; ++i) {
      const double p = components[static_cast<std::size_t>(c)].initial[static_cast<std::size_t>(i)];
      if (p > 0.0) t.log_init[static_cast<std::size_t>(c) * s + i] = std::log(p);
    }
    for (std::size_t idx = 0; idx < static_cast<std::size_t>(s) * s; ++idx) {
      const double p = components[static_cast<std::size_t>(c)].matrix[idx];
      if (p > 0.0) t.log_mat[static_cast<std::size_t>(c) * s * s + idx] = std::log(p);
    }
  }
  return t;
}

double component_loglik(const LogTables& tables, int component, int s, const SeqStat& st) {
  double ll = tables.log_init[static_cast<std::size_t>(component) * s + st.first];
  const double* mat = tables.log_mat.data() + static_cast<std::size_t>(component) * s * s;
  for (const auto& [idx, count] : st.transitions) {
    const double lp = mat[idx];
    if (lp == kNegInf) return kNegInf;
    ll += count * lp;
  }
  return ll;
}

// log membership priors for one design row under beta ((k-1) x (d+1)).
void log_priors(std::span<const double> beta, const std::vector<double>& z, int k,
                std::span<double> out) {
  out[0] = 0.0;
  const std::size_t dim = z.size();
  for (int c = 1; c < k; ++c) {
    double u = 0.0;
    for (std::size_t j = 0; j < dim; ++j)
      u += beta[static_cast<std::size_t>(c - 1) * dim + j] * z[j];
    out[static_cast<std::size_t>(c)] = u;
  }
  const double lse = log_sum_exp(out.subspan(0, static_cast<std::size_t>(k)));
  for (int c = 0; c < k; ++c) out[static_cast<std::size_t>(c)] -= lse;
}

struct EmEngine {
  const std::vector<SeqStat>& stats;
  int s = 0, k = 0, dim = 0;  // dim = d+1

  std::vector<TransitionModel> components;
  std::vector<double> beta;
  std::vector<double> resp;  // n x k

  EmEngine(const std::vector<SeqStat>& seq_stats, int n_states, int n_clusters, int n_dim)
      : stats(seq_stats), s(n_states), k(n_clusters), dim(n_dim) {}

  double weighted_count_m_step(const Alphabet& alphabet) {
    const std::size_t n = stats.size();
    std::vector<double> mass(static_cast<std::size_t>(k), 0.0);
    std::vector<double> w_init(static_cast<std::size_t>(k) * s, 0.0);
    std::vector<double> w_trans(static_cast<std::size_t>(k) * s * s, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < k; ++c) {
        const double w = resp[i * static_cast<std::size_t>(k) + c];
        if (w <= 0.0) continue;
        mass[static_cast<std::size_t>(c)] += w;
        w_init[static_cast<std::size_t>(c) * s + stats[i].first] += w;
        double* wt = w_trans.data() + static_cast<std::size_t>(c) * s * s;
        for (const auto& [idx, count] : stats[i].transitions) wt[idx] += w * count;
      }
    }
    components.assign(static_cast<std::size_t>(k), TransitionModel{});
    for (int c = 0; c < k; ++c) {
      auto& comp = components[static_cast<std::size_t>(c)];
      comp.alphabet = alphabet;
      comp.scaling = Scaling::stochastic;
      comp.initial.assign(static_cast<std::size_t>(s), 0.0);
      comp.matrix.assign(static_cast<std::size_t>(s) * s, 0.0);
      const double m = mass[static_cast<std::size_t>(c)];
      if (m > 0.0)
        for (int i = 0; i < s; ++i)
          comp.initial[static_cast<std::size_t>(i)] =
              w_init[static_cast<std::size_t>(c) * s + i] / m;
      for (int i = 0; i < s; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < s; ++j)
          row_sum += w_trans[static_cast<std::size_t>(c) * s * s + i * s + j];
        if (row_sum <= 0.0) continue;
        for (int j = 0; j < s; ++j)
          comp.at(i, j) = w_trans[static_cast<std::size_t>(c) * s * s + i * s + j] / row_sum;
      }
    }
    double min_mass = std::numeric_limits<double>::infinity();
    for (double m : mass) min_mass = std::min(min_mass, m);
    update_beta(mass);
    return min_mass;
  }

  // Membership objective for the current responsibilities.
  double membership_objective(std::span<const double> b) const {
    std::vector<double> lp(static_cast<std::size_t>(k));
    double f = 0.0;
    for (std::size_t i = 0; i < stats.size(); ++i) {
      log_priors(b, stats[i].z, k, lp);
      for (int c = 0; c < k; ++c) {
        const double w = resp[i * static_cast<std::size_t>(k) + c];
        if (w > 0.0) f += w * lp[static_cast<std::size_t>(c)];
      }
    }
    return f;
  }

  void update_beta(const std::vector<double>& mass) {
    if (k == 1) return;
    if (dim == 1) {
      // intercept-only: closed-form weighted multinomial MLE
      constexpr double tiny = 1e-300;
      const double ref = std::log(std::max(mass[0], tiny));
      for (int c = 1; c < k; ++c)
        beta[static_cast<std::size_t>(c - 1)] =
            std::log(std::max(mass[static_cast<std::size_t>(c)], tiny)) - ref;
      return;
    }
    newton_beta();
  }

  // Newton-Raphson on the weighted multinomial logistic objective, with a
  // step cap and halving so the objective never decreases.
  void newton_beta() {
    const int p = (k - 1) * dim;
    std::vector<double> lp(static_cast<std::size_t>(k));
    std::vector<double> theta(static_cast<std::size_t>(k));
    std::vector<double> grad(static_cast<std::size_t>(p));
    std::vector<double> delta(static_cast<std::size_t>(p));
    Mat info(p, p);

    double f = membership_objective(beta);
    for (int iter = 0; iter < 50; ++iter) {
      std::fill(grad.begin(), grad.end(), 0.0);
      info = Mat(p, p);
      for (std::size_t i = 0; i < stats.size(); ++i) {
        log_priors(beta, stats[i].z, k, lp);
        for (int c = 0; c < k; ++c) theta[static_cast<std::size_t>(c)] = std::exp(lp[static_cast<std::size_t>(c)]);
        const auto& z = stats[i].z;
        for (int c = 1; c < k; ++c) {
          const double diff =
              resp[i * static_cast<std::size_t>(k) + c] - theta[static_cast<std::size_t>(c)];
          for (int j = 0; j < dim; ++j)
            grad[static_cast<std::size_t>((c - 1) * dim + j)] += diff * z[static_cast<std::size_t>(j)];
        }
        for (int c1 = 1; c1 < k; ++c1)
          for (int c2 = 1; c2 < k; ++c2) {
            const double coef = theta[static_cast<std::size_t>(c1)] *
                                ((c1 == c2 ? 1.0 : 0.0) - theta[static_cast<std::size_t>(c2)]);
            if (coef == 0.0) continue;
            for (int j1 = 0; j1 < dim; ++j1)
              for (int j2 = 0; j2 < dim; ++j2)
                info((c1 - 1) * dim + j1, (c2 - 1) * dim + j2) +=
                    coef * z[static_cast<std::size_t>(j1)] * z[static_cast<std::size_t>(j2)];
          }
      }
      double gmax = 0.0;
      for (double g : grad) gmax = std::max(gmax, std::abs(g));
      if (gmax < 1e-9 * std::max<double>(1.0, static_cast<double>(stats.size()))) break;

      if (!solve(info, grad, delta, 1e-12)) break;  // flat direction: keep current beta
      double dmax = 0.0;
      for (double d : delta) dmax = std::max(dmax, std::abs(d));
      if (dmax > 10.0)
        for (double& d : delta) d *= 10.0 / dmax;

      double step = 1.0;
      bool accepted = false;
      std::vector<double> candidate(beta.size());
      while (step > 1e-6) {
        for (std::size_t j = 0; j < beta.size(); ++j) candidate[j] = beta[j] + step * delta[j];
        const double f_new = membership_objective(candidate);
        if (f_new >= f - 1e-12) {
          beta = candidate;
          accepted = f_new > f + 1e-12;
          f = f_new;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
    }
  }

  // E-step: fills resp, returns logL (or -inf when a sequence is impossible
  // under every component).
  double e_step() {
    const LogTables tables = log_tables(components);
    std::vector<double> a(static_cast<std::size_t>(k));
    std::vector<double> lp(static_cast<std::size_t>(k));
    double logl = 0.0;
    for (std::size_t i = 0; i < stats.size(); ++i) {
      log_priors(beta, stats[i].z, k, lp);
      for (int c = 0; c < k; ++c)
        a[static_cast<std::size_t>(c)] =
            lp[static_cast<std::size_t>(c)] + component_loglik(tables, c, s, stats[i]);
      const double lse = log_sum_exp(a);
      if (lse == kNegInf) return kNegInf;
      logl += lse;
      for (int c = 0; c < k; ++c)
        resp[i * static_cast<std::size_t>(k) + c] = std::exp(a[static_cast<std::size_t>(c)] - lse);
    }
    return logl;
  }
};

struct RestartOutcome {
  bool degenerate = true;
  bool monotone = true;
  double log_likelihood = kNegInf;
  std::vector<TransitionModel> components;
  std::vector<double> beta;
  std::vector<double> trace;
};

RestartOutcome run_restart(const std::vector<SeqStat>& stats, const Alphabet& alphabet,
                           int k, int dim, const EmOptions& options, std::uint64_t seed) {
  RestartOutcome out;
  const std::size_t n = stats.size();
  EmEngine engine(stats, alphabet.size(), k, dim);
  engine.beta.assign(static_cast<std::size_t>(k - 1) * dim, 0.0);
  engine.resp.assign(n * static_cast<std::size_t>(k), 1.0);

  Rng rng(seed);
  if (k > 1) {
    for (std::size_t i = 0; i < n; ++i)
      rng.dirichlet_ones({engine.resp.data() + i * static_cast<std::size_t>(k),
                          static_cast<std::size_t>(k)});
  }

  double min_mass = engine.weighted_count_m_step(alphabet);
  double prev = kNegInf;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double logl = engine.e_step();
    out.trace.push_back(logl);
    if (!std::isfinite(logl)) {
      out.degenerate = true;
      return out;
    }
    if (iter > 0) {
      if (logl < prev - 1e-9 * std::max(1.0, std::abs(prev))) out.monotone = false;
      if ((logl - prev) / std::max(1.0, std::abs(logl)) < options.tolerance) {
        prev = logl;
        break;
      }
    }
    prev = logl;
    if (iter + 1 < options.max_iterations) min_mass = engine.weighted_count_m_step(alphabet);
  }

  // cluster mass under the final responsibilities decides degeneracy
  std::vector<double> mass(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < k; ++c) mass[static_cast<std::size_t>(c)] += engine.resp[i * static_cast<std::size_t>(k) + c];
  const double final_min_mass = *std::min_element(mass.begin(), mass.end());
  (void)min_mass;

  out.degenerate = final_min_mass < 1.0 || !std::isfinite(prev);
  out.log_likelihood = prev;
  out.components = std::move(engine.components);
  out.beta = std::move(engine.beta);
  return out;
}

}  // namespace

std::vector<double> MixtureModel::priors(std::span<const double> z) const {
  if (z.size() != covariate_names.size())
    throw data_error("priors: covariate vector has wrong length");
  std::vector<double> row;
  row.reserve(z.size() + 1);
  row.push_back(1.0);
  row.insert(row.end(), z.begin(), z.end());
  std::vector<double> lp(static_cast<std::size_t>(k));
  log_priors(beta, row, k, lp);
  for (auto& v : lp) v = std::exp(v);
  return lp;
}

long count_parameters(const MixtureModel& model) {
  const int s = model.alphabet.size();
  const int dim = static_cast<int>(model.covariate_names.size()) + 1;
  long p = static_cast<long>(model.k - 1) * dim;
  for (const auto& comp : model.components) {
    int nnz_init = 0;
    for (double v : comp.initial)
      if (v != 0.0) ++nnz_init;
    if (nnz_init > 0) p += nnz_init - 1;
    for (int i = 0; i < s; ++i) {
      int nnz = 0;
      for (int j = 0; j < s; ++j)
        if (comp.at(i, j) != 0.0) ++nnz;
      if (nnz > 0) p += nnz - 1;
    }
  }
  return p;
}

FitResult fit_em(std::span<const StateSequence> sequences, const Alphabet& alphabet,
                 std::span<const std::string> covariate_names, int k,
                 const EmOptions& options) {
  if (k < 1) throw config_error("mixture: k must be >= 1");
  if (options.restarts < 1) throw config_error("mixture: restarts must be >= 1");
  const auto stats = prepare_stats(sequences, alphabet, covariate_names);
  const int dim = static_cast<int>(covariate_names.size()) + 1;
  // with one cluster the initial responsibilities are forced, so every
  // restart is identical
  const int restarts = (k == 1) ? 1 : options.restarts;

  std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(restarts));
  parallel_for(restarts, options.threads, [&](int r) {
    outcomes[static_cast<std::size_t>(r)] =
        run_restart(stats, alphabet, k, dim, options,
                    derive_seed(options.seed, "em-restart", static_cast<std::uint64_t>(r)));
  });

  int best = -1;
  int n_degenerate = 0;
  for (int r = 0; r < restarts; ++r) {
    const auto& o = outcomes[static_cast<std::size_t>(r)];
    if (o.degenerate) {
      ++n_degenerate;
      continue;
    }
    if (best < 0 || o.log_likelihood > outcomes[static_cast<std::size_t>(best)].log_likelihood)
      best = r;
  }
  if (best < 0)
    throw data_error("mixture fit failed: all " + std::to_string(restarts) +
                     " restarts degenerate for k=" + std::to_string(k));

  auto& winner = outcomes[static_cast<std::size_t>(best)];
  if (!winner.monotone)
    throw numeric_error("mixture: log-likelihood decreased during EM (k=" +
                        std::to_string(k) + ")");

  FitResult fit;
  fit.model.k = k;
  fit.model.alphabet = alphabet;
  fit.model.components = std::move(winner.components);
  fit.model.covariate_names.assign(covariate_names.begin(), covariate_names.end());
  fit.model.beta = std::move(winner.beta);
  fit.log_likelihood = winner.log_likelihood;
  fit.n_sequences = static_cast<int>(sequences.size());
  fit.n_restarts = restarts;
  fit.n_restarts_degenerate = n_degenerate;
  fit.best_restart = best;
  fit.trace = std::move(winner.trace);
  for (int r = 0; r < restarts; ++r) {
    const auto& o = outcomes[static_cast<std::size_t>(r)];
    if (!o.degenerate && fit.log_likelihood - o.log_likelihood <= 1e-4)
      ++fit.n_restarts_converged_to_best;
  }

  // posteriors under the winning model
  EmEngine engine(stats, alphabet.size(), k, dim);
  engine.components = fit.model.components;
  engine.beta = fit.model.beta;
  engine.resp.assign(stats.size() * static_cast<std::size_t>(k), 0.0);
  engine.e_step();
  fit.posteriors = std::move(engine.resp);

  fit.n_parameters = count_parameters(fit.model);
  fit.bic = -2.0 * fit.log_likelihood +
            static_cast<double>(fit.n_parameters) * std::log(static_cast<double>(fit.n_sequences));
  return fit;
}

double mixture_log_likelihood(const MixtureModel& model,
                              std::span<const StateSequence> sequences) {
  const auto stats = prepare_stats(sequences, model.alphabet, model.covariate_names);
  EmEngine engine(stats, model.alphabet.size(), model.k,
                  static_cast<int>(model.covariate_names.size()) + 1);
  engine.components = model.components;
  engine.beta = model.beta;
  engine.resp.assign(stats.size() * static_cast<std::size_t>(model.k), 0.0);
  return engine.e_step();
}

SelectKResult select_k(std::span<const StateSequence> sequences, const Alphabet& alphabet,
                       std::span<const std::string> covariate_names, int k_min, int k_max,
                       const EmOptions& options) {
  if (k_min < 1 || k_max < k_min) throw config_error("select_k: bad k range");
  prepare_stats(sequences, alphabet, covariate_names);  // validate inputs up front

  SelectKResult result;
  bool have_best = false;
  for (int k = k_min; k <= k_max; ++k) {
    EmOptions per_k = options;
    per_k.seed = derive_seed(options.seed, "select-k", static_cast<std::uint64_t>(k));
    BicRow row;
    row.k = k;
    try {
      FitResult fit = fit_em(sequences, alphabet, covariate_names, k, per_k);
      row.log_likelihood = fit.log_likelihood;
      row.bic = fit.bic;
      row.n_parameters = fit.n_parameters;
      row.n_restarts_converged = fit.n_restarts_converged_to_best;
      if (!have_best || fit.bic < result.best.bic) {
        result.best = std::move(fit);
        result.best_k = k;
        have_best = true;
      }
    } catch (const data_error&) {
      row.failed = true;  // degenerate for this k; recorded, excluded from argmin
    }
    result.table.push_back(row);
  }
  if (!have_best) throw data_error("select_k: every k in range failed");
  return result;
}

CovariateInference covariate_inference(const FitResult& fit,
                                       std::span<const StateSequence> sequences) {
  const auto& model = fit.model;
  if (model.k < 2) throw config_error("covariate inference requires k >= 2");
  if (model.covariate_names.empty())
    throw config_error("covariate inference requires a fit with covariates");

  const auto stats = prepare_stats(sequences, model.alphabet, model.covariate_names);
  const int k = model.k;
  const int s = model.alphabet.size();
  const int dim = static_cast<int>(model.covariate_names.size()) + 1;
  const int p = (k - 1) * dim;

  // component likelihoods are held fixed; only beta moves
  const LogTables tables = log_tables(model.components);
  std::vector<double> ll(stats.size() * static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < stats.size(); ++i)
    for (int c = 0; c < k; ++c)
      ll[i * static_cast<std::size_t>(k) + c] = component_loglik(tables, c, s, stats[i]);

  auto loglik_at = [&](std::span<const double> beta) {
    std::vector<double> lp(static_cast<std::size_t>(k));
    std::vector<double> a(static_cast<std::size_t>(k));
    double total = 0.0;
    for (std::size_t i = 0; i < stats.size(); ++i) {
      log_priors(beta, stats[i].z, k, lp);
      for (int c = 0; c < k; ++c)
        a[static_cast<std::size_t>(c)] =
            lp[static_cast<std::size_t>(c)] + ll[i * static_cast<std::size_t>(k) + c];
      total += log_sum_exp(a);
    }
    return total;
  };

  std::vector<double> beta = model.beta;
  std::vector<double> step(static_cast<std::size_t>(p));
  for (int a = 0; a < p; ++a)
    step[static_cast<std::size_t>(a)] =
        1e-5 * std::max(1.0, std::abs(beta[static_cast<std::size_t>(a)]));

  const double f0 = loglik_at(beta);
  auto shifted = [&](int a, double ha, int b, double hb) {
    std::vector<double> candidate = beta;
    candidate[static_cast<std::size_t>(a)] += ha;
    if (b >= 0) candidate[static_cast<std::size_t>(b)] += hb;
    return loglik_at(candidate);
  };

  Mat hessian(p, p);
  for (int a = 0; a < p; ++a) {
    const double ha = step[static_cast<std::size_t>(a)];
    hessian(a, a) = (shifted(a, ha, -1, 0.0) - 2.0 * f0 + shifted(a, -ha, -1, 0.0)) / (ha * ha);
    for (int b = a + 1; b < p; ++b) {
      const double hb = step[static_cast<std::size_t>(b)];
      const double h = (shifted(a, ha, b, hb) - shifted(a, ha, b, -hb) -
                        shifted(a, -ha, b, hb) + shifted(a, -ha, b, -hb)) /
                       (4.0 * ha * hb);
      hessian(a, b) = h;
      hessian(b, a) = h;
    }
  }

  Mat info(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) info(a, b) = -hessian(a, b);
  Mat covariance;
  if (!invert(std::move(info), covariance, 1e-10))
    throw numeric_error(
        "covariate inference: singular information matrix; consider fewer covariates or "
        "more data");

  CovariateInference inference;
  for (int c = 1; c < k; ++c) {
    for (int j = 0; j < dim; ++j) {
      const int idx = (c - 1) * dim + j;
      const double variance = covariance(idx, idx);
      if (!(variance > 0.0) || !std::isfinite(variance))
        throw numeric_error(
            "covariate inference: information matrix not positive definite; consider fewer "
            "covariates or more data");
      CovariateRow row;
      row.cluster = c + 1;
      row.variable = (j == 0) ? "(intercept)" : model.covariate_names[static_cast<std::size_t>(j - 1)];
      row.estimate = beta[static_cast<std::size_t>(idx)];
      row.se = std::sqrt(variance);
      row.ci_low = row.estimate - 1.96 * row.se;
      row.ci_high = row.estimate + 1.96 * row.se;
      row.t = row.estimate / row.se;
      row.p = two_sided_p(row.t);
      inference.rows.push_back(std::move(row));
    }
  }
  return inference;
}

std::vector<TransitionNetwork> cluster_networks(const FitResult& fit) {
  std::vector<TransitionNetwork> nets;
  nets.reserve(fit.model.components.size());
  for (const auto& comp : fit.model.components) nets.push_back(TransitionNetwork{comp});
  return nets;
}

}  // namespace tna
