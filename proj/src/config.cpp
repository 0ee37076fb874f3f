#include "tna/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tna/errors.hpp"
#include "tna/exports.hpp"

namespace tna {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) out += (out.empty() ? "" : ",") + item;
  return out;
}

}  // namespace

Ini parse_ini(std::istream& in) {
  Ini ini;
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error("config line " + std::to_string(line_no) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      ini.sections[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw config_error("config line " + std::to_string(line_no) + ": empty key");
    auto [it, inserted] = ini.sections[section].emplace(key, value);
    (void)it;
    if (!inserted)
      throw config_error("config line " + std::to_string(line_no) + ": duplicate key \"" +
                         key + "\"");
  }
  return ini;
}

namespace {

struct IniReader {
  const Ini& ini;
  std::map<std::string, std::map<std::string, bool>> consumed;

  bool has(const std::string& section, const std::string& key) {
    auto sec = ini.sections.find(section);
    if (sec == ini.sections.end()) return false;
    return sec->second.count(key) > 0;
  }

  std::string get(const std::string& section, const std::string& key) {
    consumed[section][key] = true;
    return ini.sections.at(section).at(key);
  }

  void string_opt(const std::string& section, const std::string& key, std::string& out) {
    if (has(section, key)) out = get(section, key);
  }

  void list_opt(const std::string& section, const std::string& key,
                std::vector<std::string>& out) {
    if (has(section, key)) out = split_list(get(section, key));
  }

  void int_opt(const std::string& section, const std::string& key, int& out) {
    if (!has(section, key)) return;
    const std::string raw = get(section, key);
    try {
      std::size_t pos = 0;
      out = std::stoi(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
    } catch (const std::exception&) {
      throw config_error("config " + section + "." + key + ": not an integer: \"" + raw + "\"");
    }
  }

  void u64_opt(const std::string& section, const std::string& key, std::uint64_t& out) {
    if (!has(section, key)) return;
    const std::string raw = get(section, key);
    try {
      std::size_t pos = 0;
      out = std::stoull(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
    } catch (const std::exception&) {
      throw config_error("config " + section + "." + key + ": not an integer: \"" + raw + "\"");
    }
  }

  void double_opt(const std::string& section, const std::string& key, double& out) {
    if (!has(section, key)) return;
    const std::string raw = get(section, key);
    try {
      std::size_t pos = 0;
      out = std::stod(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
    } catch (const std::exception&) {
      throw config_error("config " + section + "." + key + ": not a number: \"" + raw + "\"");
    }
  }

  void double_list_opt(const std::string& section, const std::string& key,
                       std::vector<double>& out) {
    if (!has(section, key)) return;
    const std::string raw = get(section, key);
    std::vector<double> values;
    for (const auto& item : split_list(raw)) {
      try {
        values.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw config_error("config " + section + "." + key + ": not a number: \"" + item + "\"");
      }
    }
    out = std::move(values);
  }

  void reject_unknown() const {
    for (const auto& [section, keys] : ini.sections) {
      auto sec = consumed.find(section);
      for (const auto& [key, value] : keys) {
        (void)value;
        if (sec == consumed.end() || !sec->second.count(key))
          throw config_error("config: unknown key [" + section + "] " + key);
      }
    }
  }
};

}  // namespace

AnalysisConfig AnalysisConfig::from_ini(const Ini& ini) {
  AnalysisConfig cfg;
  IniReader reader{ini, {}};

  reader.string_opt("input", "events", cfg.events_path);
  if (reader.has("input", "delimiter")) {
    const std::string d = reader.get("input", "delimiter");
    if (d == "tab" || d == "\\t")
      cfg.delimiter = '\t';
    else if (d.size() == 1)
      cfg.delimiter = d[0];
    else
      throw config_error("config input.delimiter: expected one character or \"tab\"");
  }
  reader.string_opt("input", "unit_column", cfg.unit_column);
  reader.string_opt("input", "actor_column", cfg.actor_column);
  reader.string_opt("input", "time_column", cfg.time_column);
  reader.string_opt("input", "code_column", cfg.code_column);
  reader.string_opt("input", "time_format", cfg.time_format);
  reader.list_opt("input", "alphabet", cfg.alphabet);
  for (std::size_t i = 0; i < cfg.alphabet.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.alphabet.size(); ++j)
      if (cfg.alphabet[i] == cfg.alphabet[j])
        throw config_error("config input.alphabet: duplicate label \"" + cfg.alphabet[i] + "\"");
  reader.string_opt("input", "covariates", cfg.covariates_path);
  reader.string_opt("input", "covariate_unit_column", cfg.covariate_unit_column);
  reader.list_opt("input", "covariate_columns", cfg.covariate_columns);
  reader.string_opt("input", "group_column", cfg.group_column);
  reader.list_opt("input", "unit_filter", cfg.unit_filter);
  reader.list_opt("input", "actor_filter", cfg.actor_filter);

  if (reader.has("session", "mode")) {
    const std::string mode = reader.get("session", "mode");
    if (mode == "fixed_gap")
      cfg.gap_mode = GapMode::fixed;
    else if (mode == "quantile_gap")
      cfg.gap_mode = GapMode::quantile;
    else
      throw config_error("config session.mode: expected fixed_gap or quantile_gap");
  }
  reader.double_opt("session", "gap_minutes", cfg.gap_minutes);
  reader.double_opt("session", "quantile", cfg.gap_quantile_q);

  if (reader.has("analysis", "scaling"))
    cfg.scaling = parse_scaling(reader.get("analysis", "scaling"));
  reader.string_opt("analysis", "tally_scope", cfg.tally_scope);
  if (cfg.tally_scope != "session" && cfg.tally_scope != "unit")
    throw config_error("config analysis.tally_scope: expected session or unit");
  reader.double_opt("analysis", "dyad_threshold", cfg.dyad_threshold);
  reader.double_opt("analysis", "clique_threshold", cfg.clique_threshold);
  reader.int_opt("analysis", "clique_size", cfg.clique_size);
  reader.double_opt("analysis", "spinglass_gamma", cfg.spinglass_gamma);
  reader.int_opt("analysis", "spinglass_sweeps", cfg.spinglass_sweeps);
  reader.double_opt("analysis", "pseudocount", cfg.pseudocount);

  reader.int_opt("mixture", "k_min", cfg.k_min);
  reader.int_opt("mixture", "k_max", cfg.k_max);
  reader.int_opt("mixture", "restarts", cfg.restarts);
  reader.double_opt("mixture", "em_tolerance", cfg.em_tolerance);
  reader.int_opt("mixture", "em_max_iterations", cfg.em_max_iterations);

  reader.int_opt("validation", "bootstrap_b", cfg.bootstrap_b);
  reader.double_opt("validation", "bootstrap_threshold", cfg.bootstrap_threshold);
  reader.double_opt("validation", "bootstrap_alpha", cfg.bootstrap_alpha);
  reader.string_opt("validation", "retention_rule", cfg.retention_rule);
  parse_retention_rule(cfg.retention_rule);  // validate
  reader.int_opt("validation", "n_permutations", cfg.n_permutations);
  reader.double_list_opt("validation", "drop_proportions", cfg.drop_proportions);
  reader.int_opt("validation", "stability_reps", cfg.stability_reps);
  reader.string_opt("validation", "stability_measure", cfg.stability_measure);
  parse_measure(cfg.stability_measure);  // validate

  reader.list_opt("simulate", "states", cfg.sim_states);
  reader.int_opt("simulate", "clusters", cfg.sim_clusters);
  reader.int_opt("simulate", "n_sequences", cfg.sim_n_sequences);
  reader.int_opt("simulate", "length", cfg.sim_length);
  reader.double_opt("simulate", "concentration", cfg.sim_concentration);
  reader.double_opt("simulate", "covariate_effect", cfg.sim_covariate_effect);

  reader.string_opt("output", "directory", cfg.out_dir);
  reader.u64_opt("run", "seed", cfg.seed);
  reader.int_opt("run", "threads", cfg.threads);

  reader.reject_unknown();

  if (cfg.covariate_unit_column.empty()) cfg.covariate_unit_column = cfg.unit_column;
  return cfg;
}

AnalysisConfig AnalysisConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  Ini ini = parse_ini(in);
  return from_ini(ini);
}

std::vector<std::pair<std::string, std::string>> AnalysisConfig::canonical() const {
  std::vector<std::pair<std::string, std::string>> kv;
  auto add = [&](const char* key, const std::string& value) { kv.emplace_back(key, value); };
  auto add_num = [&](const char* key, double value) { kv.emplace_back(key, format_full(value)); };
  auto add_int = [&](const char* key, long long value) {
    kv.emplace_back(key, std::to_string(value));
  };

  add("input.events", events_path);
  add("input.delimiter", std::string(1, delimiter));
  add("input.unit_column", unit_column);
  add("input.actor_column", actor_column);
  add("input.time_column", time_column);
  add("input.code_column", code_column);
  add("input.time_format", time_format);
  add("input.alphabet", join_list(alphabet));
  add("input.covariates", covariates_path);
  add("input.covariate_unit_column", covariate_unit_column);
  add("input.covariate_columns", join_list(covariate_columns));
  add("input.group_column", group_column);
  add("input.unit_filter", join_list(unit_filter));
  add("input.actor_filter", join_list(actor_filter));
  add("session.mode", gap_mode == GapMode::fixed ? "fixed_gap" : "quantile_gap");
  add_num("session.gap_minutes", gap_minutes);
  add_num("session.quantile", gap_quantile_q);
  add("analysis.scaling", scaling_name(scaling));
  add("analysis.tally_scope", tally_scope);
  add_num("analysis.dyad_threshold", dyad_threshold);
  add_num("analysis.clique_threshold", clique_threshold);
  add_int("analysis.clique_size", clique_size);
  add_num("analysis.spinglass_gamma", spinglass_gamma);
  add_int("analysis.spinglass_sweeps", spinglass_sweeps);
  add_num("analysis.pseudocount", pseudocount);
  add_int("mixture.k_min", k_min);
  add_int("mixture.k_max", k_max);
  add_int("mixture.restarts", restarts);
  add_num("mixture.em_tolerance", em_tolerance);
  add_int("mixture.em_max_iterations", em_max_iterations);
  add_int("validation.bootstrap_b", bootstrap_b);
  add_num("validation.bootstrap_threshold", bootstrap_threshold);
  add_num("validation.bootstrap_alpha", bootstrap_alpha);
  add("validation.retention_rule", retention_rule);
  add_int("validation.n_permutations", n_permutations);
  {
    std::string props;
    for (double p : drop_proportions) props += (props.empty() ? "" : ",") + format_full(p);
    add("validation.drop_proportions", props);
  }
  add_int("validation.stability_reps", stability_reps);
  add("validation.stability_measure", stability_measure);
  add("simulate.states", join_list(sim_states));
  add_int("simulate.clusters", sim_clusters);
  add_int("simulate.n_sequences", sim_n_sequences);
  add_int("simulate.length", sim_length);
  add_num("simulate.concentration", sim_concentration);
  add_num("simulate.covariate_effect", sim_covariate_effect);
  // output.directory and run.threads are execution plumbing: they change
  // where results land and how fast they arrive, never what is computed, so
  // they stay out of the canonical form and the hash
  add_int("run.seed", static_cast<long long>(seed));
  return kv;
}

std::string AnalysisConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0x1f;
    h *= 0x100000001b3ULL;
  };
  for (const auto& [key, value] : canonical()) {
    mix(key);
    mix(value);
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SessionizationPolicy AnalysisConfig::session_policy() const {
  SessionizationPolicy policy;
  policy.mode = gap_mode;
  policy.gap_seconds = gap_minutes * 60.0;
  policy.quantile = gap_quantile_q;
  return policy;
}

}  // namespace tna
