#include "tna/markov.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "tna/errors.hpp"
#include "tna/rng.hpp"

namespace tna {

std::int64_t CountMatrix::row_sum(int from) const {
  std::int64_t sum = 0;
  for (int j = 0; j < alphabet.size(); ++j) sum += at(from, j);
  return sum;
}

const char* scaling_name(Scaling s) {
  switch (s) {
    case Scaling::stochastic: return "stochastic";
    case Scaling::frequency: return "frequency";
    case Scaling::count: return "count";
  }
  return "?";
}

Scaling parse_scaling(const std::string& name) {
  if (name == "stochastic") return Scaling::stochastic;
  if (name == "frequency") return Scaling::frequency;
  if (name == "count") return Scaling::count;
  throw config_error("unknown scaling \"" + name +
                     "\" (expected stochastic, frequency, or count)");
}

bool TransitionModel::row_is_zero(int from) const {
  for (int j = 0; j < size(); ++j)
    if (at(from, j) != 0.0) return false;
  return true;
}

std::vector<int> TransitionModel::zero_rows() const {
  std::vector<int> zr;
  for (int i = 0; i < size(); ++i)
    if (row_is_zero(i)) zr.push_back(i);
  return zr;
}

CountMatrix tally(std::span<const StateSequence> sequences, const Alphabet& alphabet) {
  if (sequences.empty()) throw data_error("tally: no sequences");
  const int s = alphabet.size();
  CountMatrix cm;
  cm.alphabet = alphabet;
  cm.counts.assign(static_cast<std::size_t>(s) * s, 0);
  cm.initial_counts.assign(static_cast<std::size_t>(s), 0);
  for (const auto& seq : sequences) {
    if (seq.states.empty()) throw data_error("tally: empty sequence in unit " + seq.unit);
    for (int state : seq.states)
      if (state < 0 || state >= s)
        throw data_error("tally: state index out of range in unit " + seq.unit);
    ++cm.initial_counts[static_cast<std::size_t>(seq.states.front())];
    ++cm.n_sequences;
    for (std::size_t t = 1; t < seq.states.size(); ++t) {
      ++cm.counts[static_cast<std::size_t>(seq.states[t - 1]) * s + seq.states[t]];
      ++cm.n_transitions;
    }
  }
  return cm;
}

TransitionModel estimate(const CountMatrix& counts, Scaling scaling, double pseudocount) {
  if (pseudocount < 0.0) throw config_error("pseudocount must be >= 0");
  const int s = counts.alphabet.size();
  TransitionModel model;
  model.alphabet = counts.alphabet;
  model.scaling = scaling;
  model.initial.assign(static_cast<std::size_t>(s), 0.0);
  model.matrix.assign(static_cast<std::size_t>(s) * s, 0.0);

  const double init_total =
      static_cast<double>(counts.n_sequences) + pseudocount * static_cast<double>(s);
  if (init_total > 0.0)
    for (int i = 0; i < s; ++i)
      model.initial[static_cast<std::size_t>(i)] =
          (static_cast<double>(counts.initial_counts[static_cast<std::size_t>(i)]) +
           pseudocount) /
          init_total;

  switch (scaling) {
    case Scaling::stochastic:
      for (int i = 0; i < s; ++i) {
        const double row_total =
            static_cast<double>(counts.row_sum(i)) + pseudocount * static_cast<double>(s);
        if (row_total <= 0.0) continue;  // zero row: flagged, never renormalized
        for (int j = 0; j < s; ++j)
          model.at(i, j) = (static_cast<double>(counts.at(i, j)) + pseudocount) / row_total;
      }
      break;
    case Scaling::frequency: {
      const double total = static_cast<double>(counts.n_transitions) +
                           pseudocount * static_cast<double>(s) * static_cast<double>(s);
      if (total > 0.0)
        for (int i = 0; i < s; ++i)
          for (int j = 0; j < s; ++j)
            model.at(i, j) = (static_cast<double>(counts.at(i, j)) + pseudocount) / total;
      break;
    }
    case Scaling::count:
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) model.at(i, j) = static_cast<double>(counts.at(i, j));
      // count scaling keeps raw initial tallies too
      for (int i = 0; i < s; ++i)
        model.initial[static_cast<std::size_t>(i)] =
            static_cast<double>(counts.initial_counts[static_cast<std::size_t>(i)]);
      break;
  }
  return model;
}

double log_likelihood(const TransitionModel& model, std::span<const StateSequence> sequences) {
  if (model.scaling != Scaling::stochastic)
    throw config_error("log_likelihood requires stochastic scaling, got " +
                       std::string(scaling_name(model.scaling)));
  if (sequences.empty()) throw data_error("log_likelihood: no sequences");
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (const auto& seq : sequences) {
    const double p0 = model.initial[static_cast<std::size_t>(seq.states.front())];
    if (p0 <= 0.0) return neg_inf;
    total += std::log(p0);
    for (std::size_t t = 1; t < seq.states.size(); ++t) {
      const double p = model.at(seq.states[t - 1], seq.states[t]);
      if (p <= 0.0) return neg_inf;
      total += std::log(p);
    }
  }
  return total;
}

std::vector<StateSequence> simulate(const TransitionModel& model, int n_sequences,
                                    int length, std::uint64_t seed) {
  if (model.scaling != Scaling::stochastic)
    throw data_error("simulate requires a stochastic model");
  if (n_sequences < 1 || length < 1)
    throw config_error("simulate: n_sequences and length must be >= 1");
  double init_sum = 0.0;
  for (double p : model.initial) init_sum += p;
  if (std::abs(init_sum - 1.0) > 1e-9)
    throw data_error("simulate: initial probabilities do not sum to 1");
  for (int i = 0; i < model.size(); ++i) {
    double row_total = 0.0;
    for (int j = 0; j < model.size(); ++j) row_total += model.at(i, j);
    if (row_total != 0.0 && std::abs(row_total - 1.0) > 1e-9)
      throw data_error("simulate: row " + model.alphabet.label(i) + " is not stochastic");
  }

  Rng rng(seed);
  std::vector<StateSequence> out;
  out.reserve(static_cast<std::size_t>(n_sequences));
  for (int i = 0; i < n_sequences; ++i) {
    StateSequence seq;
    char unit[24];
    std::snprintf(unit, sizeof unit, "sim%05d", i);
    seq.unit = unit;
    int state = rng.categorical(model.initial);
    if (state < 0) throw data_error("simulate: degenerate initial distribution");
    seq.states.push_back(state);
    while (static_cast<int>(seq.states.size()) < length) {
      if (model.row_is_zero(state)) break;  // truncate at absorbing zero row
      state = rng.categorical(model.row(state));
      seq.states.push_back(state);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace tna
