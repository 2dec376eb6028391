#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uirepair/explanation_validator.h"
#include "uirepair/fraction.h"
#include "uirepair/llm_bridge.h"
#include "uirepair/matchers.h"
#include "uirepair/statement_tools.h"

namespace uirepair {

struct StageError {
  std::string stage;
  std::string code;
  std::string message;

  friend bool operator==(const StageError&, const StageError&) = default;
};

struct RepairAttempt {
  ChatPrompt prompt;
  std::string response;
  std::vector<std::string> statements;
  std::optional<RepairAssessment> assessment;
  std::optional<StageError> error;
};

struct MatchRun {
  std::string response;
  std::optional<MatchDecision> decision;  // unset when the response was malformed
  std::optional<ConsistencyReport> consistency;
  std::optional<bool> matchCorrect;
  std::optional<RepairAttempt> repair;  // only with per-run repair
  std::optional<StageError> error;
};

// One round of repeated matching calls sharing a prompt, its aggregate
// decision, and the repair requested for that decision.
struct MatchPhase {
  ChatPrompt prompt;
  std::vector<MatchRun> runs;
  std::optional<MatchDecision> decision;
  std::optional<Fraction> agreement;
  std::optional<Fraction> stability;
  std::optional<ConsistencyReport> consistency;
  std::optional<bool> matchCorrect;
  std::optional<RepairAttempt> repair;

  std::optional<RepairVerdict> verdict() const;
  std::string selected_xpath(const CandidateRanking& ranking) const;
};

struct BreakageOutcome {
  std::string breakageId;
  std::string application;
  MatcherAlgorithm matcher = MatcherAlgorithm::kEditDistance;
  std::string targetXpath;
  std::optional<std::string> groundTruthXpath;
  std::string brokenStatement;
  std::optional<CandidateRanking> ranking;
  std::optional<MatchPhase> initial;
  bool selfCorrected = false;
  std::optional<MatchPhase> corrected;
  std::vector<StageError> errors;
  double elapsedSeconds = 0.0;  // not serialized

  // The corrected phase when present, else the initial one.
  const MatchPhase* final_phase() const;
  RepairVerdict final_verdict() const;
  std::optional<FixPattern> final_pattern() const;
};

std::string to_json_line(const BreakageOutcome& outcome);
// Throws Error{kMalformedOutcomeLog}.
BreakageOutcome outcome_from_json_line(std::string_view line);

std::string serialize_outcome_log(const std::vector<BreakageOutcome>& outcomes);
std::vector<BreakageOutcome> parse_outcome_log(std::string_view text);

}  // namespace uirepair
