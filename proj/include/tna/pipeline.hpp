#pragma once

#include <string>
#include <vector>

#include "tna/config.hpp"
#include "tna/markov.hpp"
#include "tna/sequence.hpp"

namespace tna {

/// Shared front half of every command: ingest -> sessionize -> filter ->
/// attach covariates -> (optionally merge per unit) -> tally -> estimate.
struct PipelineData {
  EventLog log;
  std::vector<StateSequence> sequences;
  CountMatrix counts;
  TransitionModel model;

  std::vector<std::string> sequence_ids() const;
};

PipelineData run_estimation(const AnalysisConfig& config);

void cmd_estimate(const AnalysisConfig& config);
void cmd_analyze(const AnalysisConfig& config);
void cmd_cluster(const AnalysisConfig& config);
void cmd_validate(const AnalysisConfig& config);
void cmd_compare(const AnalysisConfig& config, const std::string& group_column);
void cmd_simulate(const AnalysisConfig& config);

/// Recomputes a bundle's self-consistency checks; returns the number of
/// failed checks (0 = consistent).
int cmd_verify(const std::string& bundle_path);

}  // namespace tna
