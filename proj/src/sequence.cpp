#include "tna/sequence.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>

#include "tna/csv.hpp"
#include "tna/errors.hpp"
#include "tna/stats.hpp"

namespace tna {

Alphabet Alphabet::from_labels(std::vector<std::string> labels) {
  Alphabet a;
  a.labels = std::move(labels);
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    if (a.labels[i].empty()) throw data_error("alphabet: empty label");
    auto [it, inserted] = a.index_.emplace(a.labels[i], static_cast<int>(i));
    (void)it;
    if (!inserted) throw data_error("alphabet: duplicate label \"" + a.labels[i] + "\"");
  }
  return a;
}

int Alphabet::index(const std::string& label) const {
  auto it = index_.find(label);
  return it == index_.end() ? -1 : it->second;
}

std::size_t EventLog::n_units() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < events.size(); ++i)
    if (i == 0 || events[i].unit != events[i - 1].unit) ++n;
  return n;
}

namespace {

// Days since 1970-01-01 from a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy =
      static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

}  // namespace

std::int64_t parse_timestamp(const std::string& text, const std::string& format) {
  if (format == "unix") {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(text, &pos);
    } catch (const std::exception&) {
      throw data_error("unparseable timestamp \"" + text + "\"");
    }
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos != text.size())
      throw data_error("unparseable timestamp \"" + text + "\"");
    return static_cast<std::int64_t>(v);
  }

  // strict strptime subset: std::get_time silently zero-fills missing
  // components on glibc, which would turn truncated timestamps into midnight
  auto fail = [&]() -> std::int64_t {
    throw data_error("unparseable timestamp \"" + text + "\" (format " + format + ")");
  };
  int year = 1970, month = 1, day = 1, hour = 0, minute = 0, second = 0;
  std::size_t pos = 0;
  auto read_int = [&](int max_digits, int min_value, int max_value, int& out) {
    std::size_t start = pos;
    int value = 0;
    while (pos < text.size() && pos - start < static_cast<std::size_t>(max_digits) &&
           std::isdigit(static_cast<unsigned char>(text[pos])))
      value = value * 10 + (text[pos++] - '0');
    if (pos == start || value < min_value || value > max_value) fail();
    out = value;
  };
  for (std::size_t f = 0; f < format.size(); ++f) {
    if (format[f] != '%') {
      if (pos >= text.size() || text[pos] != format[f]) fail();
      ++pos;
      continue;
    }
    if (++f >= format.size()) fail();
    switch (format[f]) {
      case 'Y': read_int(4, 0, 9999, year); break;
      case 'm': read_int(2, 1, 12, month); break;
      case 'd': read_int(2, 1, 31, day); break;
      case 'H': read_int(2, 0, 23, hour); break;
      case 'M': read_int(2, 0, 59, minute); break;
      case 'S': read_int(2, 0, 60, second); break;
      case '%':
        if (pos >= text.size() || text[pos] != '%') fail();
        ++pos;
        break;
      default:
        throw config_error("unsupported timestamp format directive %" +
                           std::string(1, format[f]) + " (supported: %Y %m %d %H %M %S)");
    }
  }
  if (pos != text.size()) fail();
  return days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>((rem % 3600) / 60),
                static_cast<int>(rem % 60));
  return buf;
}

EventLog ingest(std::istream& in, const ColumnSchema& schema) {
  CsvTable table = read_csv(in, schema.delimiter);
  if (table.header.empty()) throw data_error("empty input: no header row");

  auto require_column = [&](const std::string& name, const char* role) {
    const int idx = table.column(name);
    if (idx < 0)
      throw config_error(std::string("schema error: ") + role + " column \"" + name +
                         "\" not found in header");
    return idx;
  };
  const int unit_col = require_column(schema.unit_column, "unit");
  const int time_col = require_column(schema.time_column, "timestamp");
  const int code_col = require_column(schema.code_column, "code");
  const int actor_col =
      schema.actor_column.empty() ? -1 : require_column(schema.actor_column, "actor");

  if (table.rows.empty()) throw data_error("empty input: no event rows");

  EventLog log;
  std::unordered_map<std::string, int> code_index;
  if (!schema.alphabet.empty()) {
    log.alphabet = Alphabet::from_labels(schema.alphabet);
    for (int i = 0; i < log.alphabet.size(); ++i)
      code_index.emplace(log.alphabet.label(i), i);
  }

  std::vector<std::string> label_order;
  log.events.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line_no = r + 2;  // header is line 1
    Event ev;
    ev.unit = row[static_cast<std::size_t>(unit_col)];
    if (actor_col >= 0) ev.actor = row[static_cast<std::size_t>(actor_col)];
    try {
      ev.time = parse_timestamp(row[static_cast<std::size_t>(time_col)], schema.time_format);
    } catch (const data_error& e) {
      throw data_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string& code = row[static_cast<std::size_t>(code_col)];
    auto it = code_index.find(code);
    if (it == code_index.end()) {
      if (!schema.alphabet.empty())
        throw data_error("line " + std::to_string(line_no) + ": code \"" + code +
                         "\" not in alphabet");
      const int idx = static_cast<int>(label_order.size());
      label_order.push_back(code);
      it = code_index.emplace(code, idx).first;
    }
    ev.code = it->second;
    log.events.push_back(std::move(ev));
  }
  if (schema.alphabet.empty()) log.alphabet = Alphabet::from_labels(label_order);

  // Group by unit in first-appearance order, time-sorted within unit. The
  // stable sort keeps input order for equal timestamps.
  std::unordered_map<std::string, std::size_t> unit_rank;
  for (const auto& ev : log.events) unit_rank.emplace(ev.unit, unit_rank.size());
  std::stable_sort(log.events.begin(), log.events.end(),
                   [&](const Event& a, const Event& b) {
                     const std::size_t ra = unit_rank.at(a.unit), rb = unit_rank.at(b.unit);
                     if (ra != rb) return ra < rb;
                     return a.time < b.time;
                   });
  return log;
}

EventLog ingest_file(const std::string& path, const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open input file: " + path);
  return ingest(in, schema);
}

double gap_quantile(const EventLog& log, double q) {
  if (q <= 0.0 || q >= 1.0) throw config_error("gap quantile must be in (0,1)");
  std::vector<double> gaps;
  for (std::size_t i = 1; i < log.events.size(); ++i) {
    if (log.events[i].unit != log.events[i - 1].unit) continue;
    gaps.push_back(static_cast<double>(log.events[i].time - log.events[i - 1].time));
  }
  if (gaps.empty()) throw data_error("no within-unit gaps: every unit has fewer than 2 events");
  return quantile_type7(std::move(gaps), q);
}

double session_threshold(const EventLog& log, const SessionizationPolicy& policy) {
  if (policy.mode == GapMode::fixed) {
    if (policy.gap_seconds <= 0.0) throw config_error("session gap must be > 0");
    return policy.gap_seconds;
  }
  return gap_quantile(log, policy.quantile);
}

std::vector<StateSequence> sessionize(const EventLog& log,
                                      const SessionizationPolicy& policy) {
  const double threshold = session_threshold(log, policy);
  std::vector<StateSequence> out;
  const bool has_actors = std::any_of(log.events.begin(), log.events.end(),
                                      [](const Event& e) { return !e.actor.empty(); });

  std::size_t i = 0;
  while (i < log.events.size()) {
    std::size_t j = i;
    while (j < log.events.size() && log.events[j].unit == log.events[i].unit) ++j;

    int session = 0;
    StateSequence seq;
    seq.unit = log.events[i].unit;
    seq.session = session;
    auto flush = [&]() {
      if (!seq.states.empty()) out.push_back(std::move(seq));
      seq = StateSequence{};
      seq.unit = log.events[i].unit;
      seq.session = ++session;
    };
    for (std::size_t k = i; k < j; ++k) {
      if (k > i) {
        const double gap = static_cast<double>(log.events[k].time - log.events[k - 1].time);
        if (gap > threshold) flush();
      }
      seq.states.push_back(log.events[k].code);
      if (has_actors) seq.actors.push_back(log.events[k].actor);
    }
    if (!seq.states.empty()) out.push_back(std::move(seq));
    i = j;
  }
  return out;
}

std::vector<StateSequence> filter_unit(std::span<const StateSequence> sequences,
                                       const Selector& selector) {
  std::set<std::string> wanted(selector.values.begin(), selector.values.end());
  std::vector<StateSequence> out;

  if (selector.kind == Selector::Kind::unit) {
    for (const auto& seq : sequences)
      if (wanted.count(seq.unit)) out.push_back(seq);
  } else {
    for (const auto& seq : sequences) {
      if (seq.actors.empty())
        throw data_error("actor filter: sequences carry no actor information");
      StateSequence kept;
      kept.unit = seq.unit;
      kept.session = seq.session;
      kept.covariates = seq.covariates;
      for (std::size_t i = 0; i < seq.states.size(); ++i) {
        if (wanted.count(seq.actors[i])) {
          kept.states.push_back(seq.states[i]);
          kept.actors.push_back(seq.actors[i]);
        }
      }
      if (!kept.states.empty()) out.push_back(std::move(kept));
    }
  }

  if (out.empty()) {
    std::string values;
    for (const auto& v : selector.values) values += (values.empty() ? "" : ", ") + v;
    throw data_error(std::string("empty selection: no sequences matched ") +
                     (selector.kind == Selector::Kind::unit ? "unit" : "actor") +
                     " selector {" + values + "}");
  }
  return out;
}

std::vector<StateSequence> merge_unit_sessions(std::span<const StateSequence> sequences) {
  std::vector<StateSequence> out;
  for (const auto& seq : sequences) {
    if (!out.empty() && out.back().unit == seq.unit) {
      auto& merged = out.back();
      merged.states.insert(merged.states.end(), seq.states.begin(), seq.states.end());
      merged.actors.insert(merged.actors.end(), seq.actors.begin(), seq.actors.end());
    } else {
      out.push_back(seq);
      out.back().session = 0;
    }
  }
  return out;
}

const std::string& UnitTable::value(const std::string& unit, const std::string& column) const {
  auto it = rows.find(unit);
  if (it == rows.end()) throw data_error("unit \"" + unit + "\" not in covariates table");
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == column) return it->second[i];
  throw config_error("column \"" + column + "\" not in covariates table");
}

double UnitTable::numeric(const std::string& unit, const std::string& column) const {
  const std::string& raw = value(unit, column);
  try {
    std::size_t pos = 0;
    const double v = std::stod(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw data_error("covariate " + column + " for unit \"" + unit +
                     "\" is not numeric: \"" + raw + "\"");
  }
}

UnitTable read_unit_table(const std::string& path, const std::string& unit_column,
                          char delimiter) {
  CsvTable csv = read_csv_file(path, delimiter);
  const int unit_col = csv.column(unit_column);
  if (unit_col < 0)
    throw config_error("schema error: unit column \"" + unit_column +
                       "\" not found in covariates file " + path);
  UnitTable table;
  for (std::size_t i = 0; i < csv.header.size(); ++i)
    if (static_cast<int>(i) != unit_col) table.columns.push_back(csv.header[i]);
  for (const auto& row : csv.rows) {
    std::vector<std::string> values;
    for (std::size_t i = 0; i < row.size(); ++i)
      if (static_cast<int>(i) != unit_col) values.push_back(row[i]);
    auto [it, inserted] = table.rows.emplace(row[static_cast<std::size_t>(unit_col)],
                                             std::move(values));
    (void)it;
    if (!inserted)
      throw data_error("duplicate unit \"" + row[static_cast<std::size_t>(unit_col)] +
                       "\" in covariates file");
  }
  return table;
}

void attach_covariates(std::vector<StateSequence>& sequences, const UnitTable& table,
                       std::span<const std::string> columns) {
  for (auto& seq : sequences)
    for (const auto& col : columns) seq.covariates[col] = table.numeric(seq.unit, col);
}

}  // namespace tna
