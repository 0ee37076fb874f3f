// Independent oracles used by the unit and acceptance suites. Everything in
// this header recomputes results from first principles (nested loops,
// exhaustive enumeration, Monte Carlo) so it shares no code path with the
// library implementations it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "tna/markov.hpp"
#include "tna/rng.hpp"
#include "tna/sequence.hpp"

namespace oracle {

// plain pair counting over adjacent states
struct PairCounts {
  std::map<std::pair<int, int>, long> transitions;
  std::map<int, long> initials;
  long n_sequences = 0;
  long n_transitions = 0;
};

inline PairCounts brute_pair_counts(const std::vector<tna::StateSequence>& sequences) {
  PairCounts counts;
  for (const auto& seq : sequences) {
    ++counts.initials[seq.states.front()];
    ++counts.n_sequences;
    for (std::size_t t = 1; t < seq.states.size(); ++t) {
      ++counts.transitions[{seq.states[t - 1], seq.states[t]}];
      ++counts.n_transitions;
    }
  }
  return counts;
}

// random row-stochastic model over `s` states (dense, all entries positive)
inline tna::TransitionModel random_stochastic(int s, tna::Rng& rng, double concentration = 1.0) {
  tna::TransitionModel model;
  std::vector<std::string> labels;
  for (int i = 0; i < s; ++i) labels.push_back(std::string(1, static_cast<char>('A' + i)));
  model.alphabet = tna::Alphabet::from_labels(labels);
  model.scaling = tna::Scaling::stochastic;
  model.initial.assign(static_cast<std::size_t>(s), 0.0);
  model.matrix.assign(static_cast<std::size_t>(s) * s, 0.0);
  rng.dirichlet(concentration, model.initial);
  for (int i = 0; i < s; ++i)
    rng.dirichlet(concentration,
                  {model.matrix.data() + static_cast<std::size_t>(i) * s,
                   static_cast<std::size_t>(s)});
  return model;
}

inline tna::TransitionModel model_from_rows(const std::vector<std::string>& labels,
                                            const std::vector<double>& initial,
                                            const std::vector<std::vector<double>>& rows) {
  tna::TransitionModel model;
  model.alphabet = tna::Alphabet::from_labels(labels);
  model.scaling = tna::Scaling::stochastic;
  model.initial = initial;
  for (const auto& row : rows)
    model.matrix.insert(model.matrix.end(), row.begin(), row.end());
  return model;
}

// Monte Carlo expected visits to every node for walks from `src` absorbed at
// `target`; walks that hit a zero row truncate (their visits still count).
inline std::vector<double> mc_visits(const tna::TransitionModel& model, int src, int target,
                                     long n_walks, tna::Rng& rng, long max_steps = 1000000) {
  const int s = model.size();
  std::vector<double> visits(static_cast<std::size_t>(s), 0.0);
  for (long w = 0; w < n_walks; ++w) {
    int state = src;
    long steps = 0;
    while (state != target && steps++ < max_steps) {
      if (model.row_is_zero(state)) break;
      state = rng.categorical(model.row(state));
      if (state != target) visits[static_cast<std::size_t>(state)] += 1.0;
    }
  }
  for (auto& v : visits) v /= static_cast<double>(n_walks);
  return visits;
}

// all dyads by scanning every unordered pair
inline std::vector<std::pair<int, int>> brute_dyads(const tna::TransitionModel& model,
                                                    double threshold) {
  std::vector<std::pair<int, int>> dyads;
  for (int a = 0; a < model.size(); ++a)
    for (int b = a + 1; b < model.size(); ++b)
      if (model.at(a, b) >= threshold && model.at(b, a) >= threshold)
        dyads.emplace_back(a, b);
  return dyads;
}

// all triads by scanning every triple
inline std::vector<std::vector<int>> brute_triads(const tna::TransitionModel& model,
                                                  double threshold) {
  std::vector<std::vector<int>> triads;
  for (int a = 0; a < model.size(); ++a)
    for (int b = a + 1; b < model.size(); ++b)
      for (int c = b + 1; c < model.size(); ++c) {
        const bool ok = model.at(a, b) >= threshold && model.at(b, a) >= threshold &&
                        model.at(a, c) >= threshold && model.at(c, a) >= threshold &&
                        model.at(b, c) >= threshold && model.at(c, b) >= threshold;
        if (ok) triads.push_back({a, b, c});
      }
  return triads;
}

// directed-weighted Potts Hamiltonian recomputed from scratch
inline double potts_energy(const tna::TransitionModel& model, const std::vector<int>& c,
                           double gamma) {
  const int s = model.size();
  std::vector<double> sout(static_cast<std::size_t>(s), 0.0), sin(static_cast<std::size_t>(s), 0.0);
  double total = 0.0;
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      if (i != j) {
        sout[static_cast<std::size_t>(i)] += model.at(i, j);
        sin[static_cast<std::size_t>(j)] += model.at(i, j);
        total += model.at(i, j);
      }
  double h = 0.0;
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      if (i == j || c[static_cast<std::size_t>(i)] != c[static_cast<std::size_t>(j)]) continue;
      const double expected =
          total > 0.0 ? sout[static_cast<std::size_t>(i)] * sin[static_cast<std::size_t>(j)] / total : 0.0;
      h -= model.at(i, j) - gamma * expected;
    }
  return h;
}

// enumerate all set partitions of {0..n-1} as restricted growth strings
inline void all_partitions(int n, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> assignment(static_cast<std::size_t>(n), 0);
  auto rec = [&](auto&& self, int i, int max_used) -> void {
    if (i == n) {
      visit(assignment);
      return;
    }
    for (int c = 0; c <= max_used + 1 && c < n; ++c) {
      assignment[static_cast<std::size_t>(i)] = c;
      self(self, i + 1, std::max(max_used, c));
    }
  };
  rec(rec, 0, -1);
}

// exhaustive optimum of the Potts Hamiltonian (n <= ~10)
inline double best_partition_energy(const tna::TransitionModel& model, double gamma,
                                    std::vector<int>* best_assignment = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  all_partitions(model.size(), [&](const std::vector<int>& assignment) {
    const double h = potts_energy(model, assignment, gamma);
    if (h < best) {
      best = h;
      if (best_assignment) *best_assignment = assignment;
    }
  });
  return best;
}

// community labels compared up to relabeling
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> fwd, rev;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [fit, finserted] = fwd.emplace(a[i], b[i]);
    if (!finserted && fit->second != b[i]) return false;
    auto [rit, rinserted] = rev.emplace(b[i], a[i]);
    if (!rinserted && rit->second != a[i]) return false;
  }
  return true;
}

inline double l_inf(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// sequences drawn directly (no event-log detour) for estimation tests
inline std::vector<tna::StateSequence> random_sequences(int n, int length, int s,
                                                        tna::Rng& rng) {
  std::vector<tna::StateSequence> out;
  for (int i = 0; i < n; ++i) {
    tna::StateSequence seq;
    seq.unit = "u" + std::to_string(i);
    const int len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(length)));
    for (int t = 0; t < len; ++t)
      seq.states.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(s))));
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace oracle
