#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace tna {

/// Fixed, ordered state space. The label order is the row/column order of
/// every matrix downstream, so it is set once (first appearance in the data
/// or an explicit list) and never reshuffled.
struct Alphabet {
  std::vector<std::string> labels;

  static Alphabet from_labels(std::vector<std::string> labels);

  int size() const { return static_cast<int>(labels.size()); }
  /// Index of a label, -1 when absent.
  int index(const std::string& label) const;
  const std::string& label(int i) const { return labels[static_cast<std::size_t>(i)]; }
  bool operator==(const Alphabet& other) const { return labels == other.labels; }

 private:
  std::unordered_map<std::string, int> index_;
};

/// One coded, timestamped event. `code` is an index into the alphabet;
/// `time` is seconds since the Unix epoch.
struct Event {
  std::string unit;
  std::string actor;
  std::int64_t time = 0;
  int code = 0;
};

/// Events grouped by unit (units in first-appearance order) and sorted
/// within unit by (time, stable input order).
struct EventLog {
  Alphabet alphabet;
  std::vector<Event> events;

  std::size_t n_units() const;
};

/// Ordered states of one (unit, session). `actors` parallels `states` when
/// the input had an actor column; it is empty otherwise.
struct StateSequence {
  std::string unit;
  int session = 0;
  std::vector<int> states;
  std::vector<std::string> actors;
  std::map<std::string, double> covariates;
};

struct ColumnSchema {
  std::string unit_column = "unit";
  std::string actor_column;  // optional
  std::string time_column = "time";
  std::string code_column = "code";
  /// strptime-style format, or "unix" for integer epoch seconds.
  std::string time_format = "%Y-%m-%dT%H:%M:%S";
  char delimiter = ',';
  /// When non-empty, fixes the alphabet (and rejects unknown codes).
  std::vector<std::string> alphabet;
};

enum class GapMode { fixed, quantile };

struct SessionizationPolicy {
  GapMode mode = GapMode::fixed;
  double gap_seconds = 20.0 * 60.0;  // fixed mode
  double quantile = 0.9;             // quantile mode
};

EventLog ingest(std::istream& in, const ColumnSchema& schema);
EventLog ingest_file(const std::string& path, const ColumnSchema& schema);

/// q-th empirical quantile (type-7) of within-unit inter-event gaps, in
/// seconds. Gaps never cross unit boundaries.
double gap_quantile(const EventLog& log, double q);

/// Splits each unit's events into sessions: a gap strictly greater than the
/// threshold starts a new session ("within 20 minutes" reads as inclusive).
/// The threshold is the policy gap, or the empirical quantile of gaps in
/// quantile mode. Concatenating a unit's sessions reproduces its events.
std::vector<StateSequence> sessionize(const EventLog& log,
                                      const SessionizationPolicy& policy);

/// Resolved gap threshold in seconds for a policy against a log.
double session_threshold(const EventLog& log, const SessionizationPolicy& policy);

struct Selector {
  enum class Kind { unit, actor };
  Kind kind = Kind::unit;
  std::vector<std::string> values;
};

/// Unit selector: keeps matching sequences whole. Actor selector: keeps each
/// sequence's events by the selected actors, in order (the idiographic view
/// of a shared session), dropping sequences left empty. Errors when nothing
/// matches.
std::vector<StateSequence> filter_unit(std::span<const StateSequence> sequences,
                                       const Selector& selector);

/// Concatenates each unit's sessions (in order) into one sequence per unit,
/// for tallying across a unit's whole timeline rather than within sessions.
std::vector<StateSequence> merge_unit_sessions(std::span<const StateSequence> sequences);

/// Per-unit table read from a covariates file: the unit column plus raw
/// string values for every other column (numeric parsing happens on use, so
/// a grouping column may hold arbitrary text).
struct UnitTable {
  std::vector<std::string> columns;
  std::map<std::string, std::vector<std::string>> rows;  // unit -> values

  const std::string& value(const std::string& unit, const std::string& column) const;
  double numeric(const std::string& unit, const std::string& column) const;
};

UnitTable read_unit_table(const std::string& path, const std::string& unit_column,
                          char delimiter);

/// Copies the named numeric columns onto each sequence keyed by its unit.
void attach_covariates(std::vector<StateSequence>& sequences, const UnitTable& table,
                       std::span<const std::string> columns);

/// Epoch seconds from a timestamp string; format "unix" or strptime-style.
std::int64_t parse_timestamp(const std::string& text, const std::string& format);

/// ISO-8601 (UTC) rendering of epoch seconds.
std::string format_timestamp(std::int64_t epoch_seconds);

}  // namespace tna
