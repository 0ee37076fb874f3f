#include "tna/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tna/errors.hpp"
#include "tna/linalg.hpp"
#include "tna/rng.hpp"

namespace tna {

std::vector<double> in_strength(const TransitionNetwork& net) {
  const int s = net.size();
  std::vector<double> strength(static_cast<std::size_t>(s), 0.0);
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < s; ++i)
      if (i != j) strength[static_cast<std::size_t>(j)] += net.weight(i, j);
  return strength;
}

std::vector<double> out_strength(const TransitionNetwork& net) {
  const int s = net.size();
  std::vector<double> strength(static_cast<std::size_t>(s), 0.0);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      if (i != j) strength[static_cast<std::size_t>(i)] += net.weight(i, j);
  return strength;
}

namespace {

// reach[s][t]: t reachable from s by a path of >= 1 positive-weight edges.
std::vector<std::vector<bool>> reachability(const TransitionNetwork& net) {
  const int s = net.size();
  std::vector<std::vector<bool>> reach(static_cast<std::size_t>(s),
                                       std::vector<bool>(static_cast<std::size_t>(s), false));
  for (int src = 0; src < s; ++src) {
    std::vector<int> stack;
    std::vector<bool> seen(static_cast<std::size_t>(s), false);
    stack.push_back(src);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < s; ++v) {
        if (net.weight(u, v) <= 0.0) continue;
        if (!reach[static_cast<std::size_t>(src)][static_cast<std::size_t>(v)]) {
          reach[static_cast<std::size_t>(src)][static_cast<std::size_t>(v)] = true;
          if (!seen[static_cast<std::size_t>(v)]) {
            seen[static_cast<std::size_t>(v)] = true;
            stack.push_back(v);
          }
        }
      }
    }
  }
  return reach;
}

}  // namespace

std::vector<double> betweenness_rw(const TransitionNetwork& net, long* n_pairs_out) {
  if (net.model.scaling != Scaling::stochastic)
    throw config_error("betweenness requires stochastic scaling");
  const int s = net.size();
  std::vector<double> bet(static_cast<std::size_t>(s), 0.0);
  long n_pairs = 0;
  if (s >= 2) {
    const auto reach = reachability(net);
    std::vector<int> others(static_cast<std::size_t>(s - 1));
    for (int t = 0; t < s; ++t) {
      int n_sources = 0;
      for (int src = 0; src < s; ++src)
        if (src != t && reach[static_cast<std::size_t>(src)][static_cast<std::size_t>(t)])
          ++n_sources;
      if (n_sources == 0) continue;  // unreachable pairs contribute 0

      // I - Q_t over the remaining states; t's row and column are removed,
      // which is the same as making t absorbing.
      int k = 0;
      for (int i = 0; i < s; ++i)
        if (i != t) others[static_cast<std::size_t>(k++)] = i;
      Mat a(s - 1, s - 1);
      for (int i = 0; i < s - 1; ++i)
        for (int j = 0; j < s - 1; ++j)
          a(i, j) = (i == j ? 1.0 : 0.0) -
                    net.weight(others[static_cast<std::size_t>(i)],
                               others[static_cast<std::size_t>(j)]);
      Mat fundamental;
      if (!invert(std::move(a), fundamental, 1e-10))
        throw numeric_error("betweenness: I - Q singular for target \"" +
                            net.alphabet().label(t) +
                            "\" (a closed class excludes it)");
      for (int i = 0; i < s - 1; ++i) {
        const int src = others[static_cast<std::size_t>(i)];
        if (!reach[static_cast<std::size_t>(src)][static_cast<std::size_t>(t)]) continue;
        ++n_pairs;
        for (int j = 0; j < s - 1; ++j) {
          const int v = others[static_cast<std::size_t>(j)];
          if (v == src) continue;
          bet[static_cast<std::size_t>(v)] += fundamental(i, j);
        }
      }
    }
  }
  // inversion noise can leave -1e-17 where the exact value is 0
  for (auto& v : bet)
    if (std::abs(v) < 1e-12) v = 0.0;
  if (n_pairs_out) *n_pairs_out = n_pairs;
  return bet;
}

CentralityReport centralities(const TransitionNetwork& net) {
  CentralityReport report;
  report.labels = net.alphabet().labels;
  report.in_strength = in_strength(net);
  report.out_strength = out_strength(net);
  if (net.model.scaling == Scaling::stochastic) {
    report.has_betweenness = true;
    report.betweenness = betweenness_rw(net, &report.n_betweenness_pairs);
    report.betweenness_norm = report.betweenness;
    if (report.n_betweenness_pairs > 0)
      for (auto& v : report.betweenness_norm)
        v /= static_cast<double>(report.n_betweenness_pairs);
  }
  return report;
}

std::vector<DyadPattern> find_dyads(const TransitionNetwork& net, double threshold) {
  if (net.model.scaling == Scaling::stochastic && (threshold < 0.0 || threshold > 1.0))
    throw config_error("dyad threshold must be in [0,1] for stochastic scaling");
  std::vector<DyadPattern> dyads;
  const int s = net.size();
  for (int a = 0; a < s; ++a)
    for (int b = a + 1; b < s; ++b)
      if (net.weight(a, b) >= threshold && net.weight(b, a) >= threshold)
        dyads.push_back({a, b, net.weight(a, b), net.weight(b, a), threshold});
  std::sort(dyads.begin(), dyads.end(), [](const DyadPattern& x, const DyadPattern& y) {
    const double mx = std::min(x.w_ab, x.w_ba), my = std::min(y.w_ab, y.w_ba);
    if (mx != my) return mx > my;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  return dyads;
}

double CliquePattern::min_weight() const {
  double m = std::numeric_limits<double>::infinity();
  for (double w : weights) m = std::min(m, w);
  return m;
}

std::vector<CliquePattern> find_cliques(const TransitionNetwork& net, int size,
                                        double threshold) {
  if (size < 2) throw config_error("clique size must be >= 2");
  const int s = net.size();
  // mutual graph: both directions at or above threshold
  std::vector<bool> adj(static_cast<std::size_t>(s) * s, false);
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b)
      if (a != b && net.weight(a, b) >= threshold && net.weight(b, a) >= threshold)
        adj[static_cast<std::size_t>(a) * s + b] = true;

  std::vector<CliquePattern> cliques;
  std::vector<int> current;
  auto extend = [&](auto&& self, int start) -> void {
    if (static_cast<int>(current.size()) == size) {
      CliquePattern c;
      c.nodes = current;
      c.threshold = threshold;
      for (int i : current)
        for (int j : current)
          if (i != j) c.weights.push_back(net.weight(i, j));
      cliques.push_back(std::move(c));
      return;
    }
    for (int v = start; v < s; ++v) {
      bool ok = true;
      for (int u : current)
        if (!adj[static_cast<std::size_t>(u) * s + v]) {
          ok = false;
          break;
        }
      if (!ok) continue;
      current.push_back(v);
      self(self, v + 1);
      current.pop_back();
    }
  };
  extend(extend, 0);

  std::sort(cliques.begin(), cliques.end(),
            [](const CliquePattern& x, const CliquePattern& y) {
              const double mx = x.min_weight(), my = y.min_weight();
              if (mx != my) return mx > my;
              return x.nodes < y.nodes;
            });
  return cliques;
}

namespace {

struct PottsSystem {
  int n = 0;
  std::vector<double> gain;  // g[i][j] = w_ij - gamma * p_ij, diagonal zero
  double pair(int i, int j) const {
    return gain[static_cast<std::size_t>(i) * n + j] +
           gain[static_cast<std::size_t>(j) * n + i];
  }
};

PottsSystem build_potts(const TransitionNetwork& net, double gamma) {
  PottsSystem sys;
  const int s = net.size();
  sys.n = s;
  sys.gain.assign(static_cast<std::size_t>(s) * s, 0.0);
  const auto sout = out_strength(net);
  const auto sin = in_strength(net);
  const double total = std::accumulate(sout.begin(), sout.end(), 0.0);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      if (i == j) continue;
      const double expected =
          total > 0.0 ? sout[static_cast<std::size_t>(i)] * sin[static_cast<std::size_t>(j)] / total
                      : 0.0;
      sys.gain[static_cast<std::size_t>(i) * s + j] = net.weight(i, j) - gamma * expected;
    }
  return sys;
}

double hamiltonian_of(const PottsSystem& sys, std::span<const int> c) {
  double h = 0.0;
  for (int i = 0; i < sys.n; ++i)
    for (int j = 0; j < sys.n; ++j)
      if (i != j && c[static_cast<std::size_t>(i)] == c[static_cast<std::size_t>(j)])
        h -= sys.gain[static_cast<std::size_t>(i) * sys.n + j];
  return h;
}

// Energy change of moving node i to community `to`.
double move_delta(const PottsSystem& sys, std::span<const int> c, int i, int to) {
  const int from = c[static_cast<std::size_t>(i)];
  if (from == to) return 0.0;
  double delta = 0.0;
  for (int j = 0; j < sys.n; ++j) {
    if (j == i) continue;
    const int cj = c[static_cast<std::size_t>(j)];
    if (cj == to) delta -= sys.pair(i, j);
    if (cj == from) delta += sys.pair(i, j);
  }
  return delta;
}

}  // namespace

double potts_hamiltonian(const TransitionNetwork& net, std::span<const int> assignment,
                         double gamma) {
  return hamiltonian_of(build_potts(net, gamma), assignment);
}

CommunityAssignment communities_spinglass(const TransitionNetwork& net,
                                          const SpinglassParams& params) {
  const int s = net.size();
  if (s == 0) throw data_error("communities: empty network");

  CommunityAssignment result;
  result.params = params;
  std::vector<int> labels(static_cast<std::size_t>(s));
  std::iota(labels.begin(), labels.end(), 0);

  const PottsSystem sys = build_potts(net, params.gamma);
  Rng rng(params.seed);

  int n_temps = 0;
  for (double temp = params.t_start; temp > params.t_min; temp *= params.t_factor) {
    ++n_temps;
    for (int sweep = 0; sweep < params.sweeps_per_temperature; ++sweep) {
      for (int step = 0; step < s; ++step) {
        const int node = static_cast<int>(rng.below(static_cast<std::uint64_t>(s)));
        const int proposal = static_cast<int>(rng.below(static_cast<std::uint64_t>(s)));
        if (proposal == labels[static_cast<std::size_t>(node)]) continue;
        const double delta = move_delta(sys, labels, node, proposal);
        if (delta <= 0.0 || rng.uniform() < std::exp(-delta / temp))
          labels[static_cast<std::size_t>(node)] = proposal;
      }
    }
  }

  // zero-temperature polish: apply the best improving single move until none
  bool improved = true;
  while (improved) {
    improved = false;
    for (int node = 0; node < s; ++node) {
      int best_to = labels[static_cast<std::size_t>(node)];
      double best_delta = -1e-12;
      for (int to = 0; to < s; ++to) {
        const double delta = move_delta(sys, labels, node, to);
        if (delta < best_delta) {
          best_delta = delta;
          best_to = to;
        }
      }
      if (best_to != labels[static_cast<std::size_t>(node)]) {
        labels[static_cast<std::size_t>(node)] = best_to;
        improved = true;
      }
    }
  }

  // relabel communities contiguously in order of first appearance
  std::vector<int> remap(static_cast<std::size_t>(s), -1);
  int next_id = 0;
  for (auto& l : labels) {
    if (remap[static_cast<std::size_t>(l)] < 0) remap[static_cast<std::size_t>(l)] = next_id++;
    l = remap[static_cast<std::size_t>(l)];
  }

  result.community = std::move(labels);
  result.n_communities = next_id;
  result.hamiltonian = hamiltonian_of(sys, result.community);
  result.n_temperature_steps = n_temps;
  return result;
}

SubtractionNetwork subtract(const TransitionNetwork& a, const TransitionNetwork& b) {
  if (!(a.alphabet() == b.alphabet())) {
    // list the symmetric difference so the mismatch is actionable
    std::string missing;
    for (const auto& label : a.alphabet().labels)
      if (b.alphabet().index(label) < 0) missing += (missing.empty() ? "" : ", ") + label;
    for (const auto& label : b.alphabet().labels)
      if (a.alphabet().index(label) < 0) missing += (missing.empty() ? "" : ", ") + label;
    if (missing.empty()) missing = "(same labels, different order)";
    throw data_error("subtract: alphabet mismatch: " + missing);
  }
  if (a.model.scaling != b.model.scaling)
    throw data_error("subtract: scaling mismatch (" +
                     std::string(scaling_name(a.model.scaling)) + " vs " +
                     scaling_name(b.model.scaling) + ")");
  SubtractionNetwork sub;
  sub.alphabet = a.alphabet();
  const int s = a.size();
  sub.delta.assign(static_cast<std::size_t>(s) * s, 0.0);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      sub.delta[static_cast<std::size_t>(i) * s + j] = a.weight(i, j) - b.weight(i, j);
  return sub;
}

}  // namespace tna
