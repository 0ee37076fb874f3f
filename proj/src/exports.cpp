#include "tna/exports.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tna/errors.hpp"
#include "tna/version.hpp"

namespace tna {

namespace {

std::string meta_line(const ExportMeta& meta, const char* prefix) {
  std::ostringstream out;
  out << prefix << " tool=tna version=" << kVersion << " seed=" << meta.seed
      << " config=" << (meta.config_hash.empty() ? "-" : meta.config_hash) << "\n";
  return out.str();
}

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string signed_two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.2f", v);
  return buf;
}

std::string quote_dot(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write file: " + tmp.string());
    out << content;
    if (!out) throw data_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string format_full(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  // prefer the shortest representation that round-trips
  for (int precision = 1; precision < 17; ++precision) {
    char shorter[40];
    std::snprintf(shorter, sizeof shorter, "%.*g", precision, value);
    double parsed = 0.0;
    std::sscanf(shorter, "%lf", &parsed);
    if (parsed == value) return shorter;
  }
  return buf;
}

void write_matrix_csv(const std::string& path, const TransitionModel& model,
                      const ExportMeta& meta) {
  std::ostringstream out;
  out << meta_line(meta, "#");
  out << "state";
  for (const auto& label : model.alphabet.labels) out << ',' << csv_field(label);
  out << '\n';
  for (int i = 0; i < model.size(); ++i) {
    out << csv_field(model.alphabet.label(i));
    for (int j = 0; j < model.size(); ++j) out << ',' << format_full(model.at(i, j));
    out << '\n';
  }
  atomic_write(path, out.str());
}

void write_network_dot(const std::string& path, const TransitionModel& model,
                       const ExportMeta& meta, bool include_pies) {
  std::ostringstream out;
  out << meta_line(meta, "//");
  out << "digraph transitions {\n  rankdir=LR;\n  node [shape=ellipse];\n";
  for (int i = 0; i < model.size(); ++i) {
    out << "  " << quote_dot(model.alphabet.label(i));
    if (include_pies)
      out << " [pie=" << quote_dot(two_decimals(model.initial[static_cast<std::size_t>(i)]))
          << "]";
    out << ";\n";
  }
  for (int i = 0; i < model.size(); ++i)
    for (int j = 0; j < model.size(); ++j) {
      const double w = model.at(i, j);
      if (w <= 0.0) continue;
      out << "  " << quote_dot(model.alphabet.label(i)) << " -> "
          << quote_dot(model.alphabet.label(j)) << " [label=" << quote_dot(two_decimals(w))
          << ", penwidth=" << two_decimals(0.5 + 4.0 * w) << "];\n";
    }
  out << "}\n";
  atomic_write(path, out.str());
}

void write_edges_dot(const std::string& path, const TransitionModel& model,
                     const std::vector<std::pair<int, int>>& edges, const ExportMeta& meta,
                     const std::string& graph_name) {
  std::ostringstream out;
  out << meta_line(meta, "//");
  out << "digraph " << graph_name << " {\n  rankdir=LR;\n  node [shape=ellipse];\n";
  for (int i = 0; i < model.size(); ++i)
    out << "  " << quote_dot(model.alphabet.label(i)) << ";\n";
  for (const auto& [from, to] : edges) {
    const double w = model.at(from, to);
    out << "  " << quote_dot(model.alphabet.label(from)) << " -> "
        << quote_dot(model.alphabet.label(to)) << " [label=" << quote_dot(two_decimals(w))
        << ", penwidth=" << two_decimals(0.5 + 4.0 * w) << "];\n";
  }
  out << "}\n";
  atomic_write(path, out.str());
}

void write_subtraction_dot(const std::string& path, const SubtractionNetwork& sub,
                           const ExportMeta& meta) {
  std::ostringstream out;
  out << meta_line(meta, "//");
  out << "// positive edges favor " << sub.label_a << ", negative favor " << sub.label_b
      << "\n";
  out << "digraph subtraction {\n  rankdir=LR;\n  node [shape=ellipse];\n";
  const int s = sub.alphabet.size();
  for (int i = 0; i < s; ++i) out << "  " << quote_dot(sub.alphabet.label(i)) << ";\n";
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      const double d = sub.at(i, j);
      if (d == 0.0) continue;
      out << "  " << quote_dot(sub.alphabet.label(i)) << " -> "
          << quote_dot(sub.alphabet.label(j)) << " [label=" << quote_dot(signed_two_decimals(d))
          << ", color=" << (d > 0.0 ? "blue" : "red")
          << ", penwidth=" << two_decimals(0.5 + 4.0 * std::abs(d)) << "];\n";
    }
  out << "}\n";
  atomic_write(path, out.str());
}

void write_graphml(const std::string& path, const TransitionModel& model,
                   const ExportMeta& meta) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<!-- tool=tna version=" << kVersion << " seed=" << meta.seed
      << " config=" << (meta.config_hash.empty() ? "-" : meta.config_hash) << " -->\n";
  out << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n";
  out << "  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n";
  out << "  <key id=\"initial\" for=\"node\" attr.name=\"initial_probability\" attr.type=\"double\"/>\n";
  out << "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n";
  out << "  <graph id=\"transitions\" edgedefault=\"directed\">\n";
  for (int i = 0; i < model.size(); ++i) {
    out << "    <node id=\"n" << i << "\">";
    out << "<data key=\"label\">" << xml_escape(model.alphabet.label(i)) << "</data>";
    out << "<data key=\"initial\">" << format_full(model.initial[static_cast<std::size_t>(i)])
        << "</data>";
    out << "</node>\n";
  }
  int edge_id = 0;
  for (int i = 0; i < model.size(); ++i)
    for (int j = 0; j < model.size(); ++j) {
      const double w = model.at(i, j);
      if (w <= 0.0) continue;
      out << "    <edge id=\"e" << edge_id++ << "\" source=\"n" << i << "\" target=\"n" << j
          << "\"><data key=\"weight\">" << format_full(w) << "</data></edge>\n";
    }
  out << "  </graph>\n</graphml>\n";
  atomic_write(path, out.str());
}

void write_centralities_csv(const std::string& path, const CentralityReport& report,
                            const ExportMeta& meta) {
  std::ostringstream out;
  out << meta_line(meta, "#");
  out << "# in_strength and out_strength exclude self-loops; betweenness_norm divides by "
      << report.n_betweenness_pairs << " contributing pairs\n";
  out << "measure,state,value\n";
  auto emit = [&](const char* measure, const std::vector<double>& values) {
    for (std::size_t i = 0; i < report.labels.size(); ++i)
      out << measure << ',' << csv_field(report.labels[i]) << ',' << format_full(values[i])
          << '\n';
  };
  emit("in_strength", report.in_strength);
  emit("out_strength", report.out_strength);
  if (report.has_betweenness) {
    emit("betweenness", report.betweenness);
    emit("betweenness_norm", report.betweenness_norm);
  }
  atomic_write(path, out.str());
}

void write_dyads_csv(const std::string& path, const Alphabet& alphabet,
                     const std::vector<DyadPattern>& dyads, const ExportMeta& meta) {
  std::ostringstream out;
  out << meta_line(meta, "#");
  out << "state_a,state_b,weight_ab,weight_ba,threshold\n";
  for (const auto& d : dyads)
    out << csv_field(alphabet.label(d.a)) << ',' << csv_field(alphabet.label(d.b)) << ','
        << format_full(d.w_ab) << ',' << format_full(d.w_ba) << ',' << format_full(d.threshold)
        << '\n';
  atomic_write(path, out.str());
}

void write_cliques_csv(const std::string& path, const Alphabet& alphabet,
                       const std::vector<CliquePattern>& cliques, const ExportMeta& meta) {
  std::ostringstream out;
  out << meta_line(meta, "#");
  out << "states,min_weight,weights,threshold\n";
  for (const auto& c : cliques) {
    std::string states;
    for (int node : c.nodes) states += (states.empty() ? "" : "|") + alphabet.label(node);
    std::string weights;
    for (double w : c.weights) weights += (weights.empty() ? "" : "|") + format_full(w);
    out << csv_field(states) << ',' << format_full(c.min_weight()) << ',' << csv_field(weights)
        << ',' << format_full(c.threshold) << '\n';
  }
  atomic_write(path, out.str());
}

void write_communities_csv(const std::string& path, const Alphabet& alphabet,
                           const CommunityAssignment& assignment, const ExportMeta& meta) {
  std::ostringstream out;
  out << meta_line(meta, "#");
  out << "# gamma=" << format_full(assignment.params.gamma)
      << " hamiltonian=" << format_full(assignment.hamiltonian)
      << " communities=" << assignment.n_communities << '\n';
  out << "state,community\n";
  for (std::size_t i = 0; i < assignment.community.size(); ++i)
    out << csv_field(alphabet.label(static_cast<int>(i))) << ',' << assignment.community[i]
        << '\n';
  atomic_write(path, out.str());
}

void write_bic_csv(const std::string& path, const std::vector<BicRow>& table,
                   const ExportMeta& meta) {
  std::ostringstream out;
  out << meta_line(meta, "#");
  out << "k,status,log_likelihood,bic,n_parameters,restarts_at_best\n";
  for (const auto& row : table) {
    out << row.k << ',';
    if (row.failed) {
      out << "failed,,,,\n";
    } else {
      out << "ok," << format_full(row.log_likelihood) << ',' << format_full(row.bic) << ','
          << row.n_parameters << ',' << row.n_restarts_converged << '\n';
    }
  }
  atomic_write(path, out.str());
}

void write_covariates_csv(const std::string& path, const CovariateInference& inference,
                          const ExportMeta& meta) {
  std::ostringstream out;
  out << meta_line(meta, "#");
  out << "cluster,variable,estimate,se,ci_low,ci_high,t,p\n";
  for (const auto& row : inference.rows)
    out << row.cluster << ',' << csv_field(row.variable) << ',' << format_full(row.estimate)
        << ',' << format_full(row.se) << ',' << format_full(row.ci_low) << ','
        << format_full(row.ci_high) << ',' << format_full(row.t) << ',' << format_full(row.p)
        << '\n';
  atomic_write(path, out.str());
}

void write_posteriors_csv(const std::string& path, const FitResult& fit,
                          const std::vector<std::string>& sequence_ids,
                          const ExportMeta& meta) {
  std::ostringstream out;
  out << meta_line(meta, "#");
  out << "sequence";
  for (int c = 1; c <= fit.model.k; ++c) out << ",cluster_" << c;
  out << ",assigned\n";
  for (std::size_t i = 0; i < sequence_ids.size(); ++i) {
    out << csv_field(sequence_ids[i]);
    int best = 0;
    for (int c = 0; c < fit.model.k; ++c) {
      const double w = fit.posteriors[i * static_cast<std::size_t>(fit.model.k) + c];
      out << ',' << format_full(w);
      if (w > fit.posteriors[i * static_cast<std::size_t>(fit.model.k) + best]) best = c;
    }
    out << ',' << (best + 1) << '\n';
  }
  atomic_write(path, out.str());
}

void write_bootstrap_csv(const std::string& path, const EdgeBootstrapResult& result,
                         const ExportMeta& meta) {
  std::ostringstream out;
  out << meta_line(meta, "#");
  out << "# B=" << result.params.b << " threshold=" << format_full(result.params.threshold)
      << " alpha=" << format_full(result.params.alpha)
      << " rule=" << retention_rule_name(result.params.rule) << '\n';
  out << "from,to,observed,boot_mean,boot_sd,ci_low,ci_high,p_value,retained\n";
  for (const auto& e : result.edges)
    out << csv_field(result.alphabet.label(e.from)) << ',' << csv_field(result.alphabet.label(e.to))
        << ',' << format_full(e.observed) << ',' << format_full(e.boot_mean) << ','
        << format_full(e.boot_sd) << ',' << format_full(e.ci_low) << ','
        << format_full(e.ci_high) << ',' << format_full(e.p_value) << ','
        << (e.retained ? "true" : "false") << '\n';
  atomic_write(path, out.str());
}

void write_permutation_csv(const std::string& path, const PermutationResult& result,
                           const ExportMeta& meta) {
  std::ostringstream out;
  out << meta_line(meta, "#");
  out << "# n_permutations=" << result.params.n_permutations << '\n';
  out << "from,to,observed_diff,p_value\n";
  for (const auto& e : result.edges)
    out << csv_field(result.alphabet.label(e.from)) << ',' << csv_field(result.alphabet.label(e.to))
        << ',' << format_full(e.observed_diff) << ',' << format_full(e.p_value) << '\n';
  atomic_write(path, out.str());
}

void write_disparity_csv(const std::string& path, const DisparityResult& result,
                         const ExportMeta& meta) {
  std::ostringstream out;
  out << meta_line(meta, "#");
  out << "# significance=" << format_full(result.significance) << '\n';
  out << "from,to,weight,alpha_source,alpha_target,alpha,retained\n";
  for (const auto& e : result.edges)
    out << csv_field(result.alphabet.label(e.from)) << ',' << csv_field(result.alphabet.label(e.to))
        << ',' << format_full(e.weight) << ',' << format_full(e.alpha_source) << ','
        << format_full(e.alpha_target) << ',' << format_full(e.alpha) << ','
        << (e.retained ? "true" : "false") << '\n';
  atomic_write(path, out.str());
}

void write_stability_csv(const std::string& path, const StabilityResult& result,
                         const ExportMeta& meta) {
  std::ostringstream out;
  out << meta_line(meta, "#");
  out << "# measure=" << measure_name(result.measure)
      << " cs_coefficient=" << format_full(result.cs_coefficient)
      << " n_reps=" << result.params.n_reps << '\n';
  out << "drop_proportion,mean_rank_correlation\n";
  for (std::size_t i = 0; i < result.drop_proportions.size(); ++i)
    out << format_full(result.drop_proportions[i]) << ','
        << format_full(result.mean_correlations[i]) << '\n';
  atomic_write(path, out.str());
}

}  // namespace tna
