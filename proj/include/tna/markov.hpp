#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tna/sequence.hpp"

namespace tna {

/// Raw tallies of adjacent state pairs. Transitions never cross sequence
/// boundaries; the first state of each sequence lands in initial_counts.
struct CountMatrix {
  Alphabet alphabet;
  std::vector<std::int64_t> counts;          // |S| x |S|, row-major
  std::vector<std::int64_t> initial_counts;  // |S|
  std::int64_t n_sequences = 0;
  std::int64_t n_transitions = 0;

  std::int64_t at(int from, int to) const {
    return counts[static_cast<std::size_t>(from) * alphabet.size() + to];
  }
  std::int64_t row_sum(int from) const;
};

enum class Scaling { stochastic, frequency, count };

const char* scaling_name(Scaling s);
Scaling parse_scaling(const std::string& name);

/// Initial-probability vector plus transition weights over a fixed alphabet.
/// stochastic: rows with outgoing mass sum to 1, unobserved rows stay all
/// zero and are flagged rather than renormalized. frequency: entries sum to
/// 1 over the whole matrix. count: raw tallies.
struct TransitionModel {
  Alphabet alphabet;
  Scaling scaling = Scaling::stochastic;
  std::vector<double> initial;  // |S|
  std::vector<double> matrix;   // |S| x |S|, row-major

  int size() const { return alphabet.size(); }
  double at(int from, int to) const {
    return matrix[static_cast<std::size_t>(from) * alphabet.size() + to];
  }
  double& at(int from, int to) {
    return matrix[static_cast<std::size_t>(from) * alphabet.size() + to];
  }
  std::span<const double> row(int from) const {
    return {matrix.data() + static_cast<std::size_t>(from) * alphabet.size(),
            static_cast<std::size_t>(alphabet.size())};
  }
  bool row_is_zero(int from) const;
  /// States with no outgoing mass (unobserved as a source, or absorbing).
  std::vector<int> zero_rows() const;
};

CountMatrix tally(std::span<const StateSequence> sequences, const Alphabet& alphabet);

/// Relative-frequency estimation from tallies. `pseudocount` (default 0, no
/// smoothing) is added to every transition and initial cell before
/// normalizing, for downstream likelihoods that cannot tolerate hard zeros.
TransitionModel estimate(const CountMatrix& counts, Scaling scaling = Scaling::stochastic,
                         double pseudocount = 0.0);

/// Sum over sequences of log initial[s_1] + sum_t log P[s_t][s_{t+1}].
/// A zero-probability step makes the result -infinity; that is a legal
/// value, distinct from numerical failure.
double log_likelihood(const TransitionModel& model, std::span<const StateSequence> sequences);

/// Draws sequences from a stochastic model; a walk that reaches a zero row
/// truncates early. Deterministic for a fixed seed.
std::vector<StateSequence> simulate(const TransitionModel& model, int n_sequences,
                                    int length, std::uint64_t seed);

}  // namespace tna
