#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tna/markov.hpp"

namespace tna {

/// A transition model viewed as a weighted directed graph: nodes are the
/// alphabet labels, edge (i,j) exists iff matrix[i][j] > 0 (self-loops
/// allowed). The adjacency IS the model matrix; weights are never altered.
struct TransitionNetwork {
  TransitionModel model;

  int size() const { return model.size(); }
  const Alphabet& alphabet() const { return model.alphabet; }
  double weight(int from, int to) const { return model.at(from, to); }
  bool has_edge(int from, int to) const { return model.at(from, to) > 0.0; }
};

/// Column sums excluding the diagonal: how much transitions INTO each state
/// from elsewhere. Self-loops are deliberately excluded (flagged in output
/// metadata downstream).
std::vector<double> in_strength(const TransitionNetwork& net);

/// Row sums excluding the diagonal. For stochastic rows this is 1 minus the
/// self-loop weight (and 0 for unobserved rows), so it is mostly a
/// diagnostic; it is informative for count/frequency scalings.
std::vector<double> out_strength(const TransitionNetwork& net);

/// Expected-visit betweenness for random walks on the chain: for every
/// ordered pair (s,t) with t reachable from s, the walk from s is absorbed
/// at t and each intermediate node v accumulates its expected visit count,
/// computed exactly from the fundamental matrix N = (I - Q_t)^{-1} where
/// Q_t drops row and column t. Unreachable pairs contribute nothing. A
/// singular I - Q_t (a closed class that excludes t) is an error naming t.
/// `n_pairs_out`, when given, receives the number of contributing pairs so
/// callers can normalize.
std::vector<double> betweenness_rw(const TransitionNetwork& net, long* n_pairs_out = nullptr);

struct CentralityReport {
  std::vector<std::string> labels;
  std::vector<double> in_strength;
  std::vector<double> out_strength;
  std::vector<double> betweenness;       // raw expected-visit sums
  std::vector<double> betweenness_norm;  // raw / contributing pairs
  long n_betweenness_pairs = 0;
  bool has_betweenness = false;  // only computed for stochastic scaling
};

/// All centralities at once; betweenness is skipped (not errored) for
/// non-stochastic scalings.
CentralityReport centralities(const TransitionNetwork& net);

/// Mutual pair with both directed weights at or above the threshold.
struct DyadPattern {
  int a = 0, b = 0;       // a < b
  double w_ab = 0.0, w_ba = 0.0;
  double threshold = 0.0;
};

/// All unordered pairs with both directions >= threshold (inclusive, so a
/// (0.1, 0.1) pair at threshold 0.1 qualifies), sorted by min(w_ab, w_ba)
/// descending. Self-loops never form dyads.
std::vector<DyadPattern> find_dyads(const TransitionNetwork& net, double threshold = 0.1);

/// Node subset where every ordered pair within the subset has weight >=
/// threshold. `weights` holds the directed weights for ordered pairs
/// (nodes[i] -> nodes[j], i != j) in row-major subset order: six values for
/// a triad.
struct CliquePattern {
  std::vector<int> nodes;  // ascending indices
  std::vector<double> weights;
  double threshold = 0.0;

  double min_weight() const;
};

/// Enumerates cliques by recursive extension of smaller cliques in the
/// thresholded mutual graph. size >= 2 (size 2 reproduces dyads).
std::vector<CliquePattern> find_cliques(const TransitionNetwork& net, int size = 3,
                                        double threshold = 0.05);

struct SpinglassParams {
  double gamma = 1.0;
  std::uint64_t seed = 1;
  int sweeps_per_temperature = 50;
  double t_start = 1.0;
  double t_factor = 0.99;
  double t_min = 1e-3;
};

struct CommunityAssignment {
  std::vector<int> community;  // per node, ids contiguous from 0
  int n_communities = 0;
  double hamiltonian = 0.0;
  int n_temperature_steps = 0;
  SpinglassParams params;
};

/// Directed weighted Potts Hamiltonian
///   H(c) = -sum_{i != j} (w_ij - gamma * s_out(i) * s_in(j) / W) [c_i == c_j]
/// with strengths and W over off-diagonal weights.
double potts_hamiltonian(const TransitionNetwork& net, std::span<const int> assignment,
                         double gamma);

/// Minimizes the Potts Hamiltonian by simulated annealing (geometric
/// cooling) followed by a greedy single-move polish. Deterministic for a
/// fixed seed.
CommunityAssignment communities_spinglass(const TransitionNetwork& net,
                                          const SpinglassParams& params = {});

/// Elementwise difference of two same-alphabet, same-scaling networks;
/// positive entries favor group A.
struct SubtractionNetwork {
  Alphabet alphabet;
  std::vector<double> delta;  // |S| x |S| row-major, A - B
  std::string label_a = "A";
  std::string label_b = "B";

  double at(int from, int to) const {
    return delta[static_cast<std::size_t>(from) * alphabet.size() + to];
  }
};

SubtractionNetwork subtract(const TransitionNetwork& a, const TransitionNetwork& b);

}  // namespace tna
