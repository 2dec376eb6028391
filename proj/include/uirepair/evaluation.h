#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uirepair/explanation_validator.h"
#include "uirepair/fraction.h"
#include "uirepair/llm_bridge.h"
#include "uirepair/matchers.h"
#include "uirepair/outcome.h"
#include "uirepair/statement_tools.h"

namespace uirepair {

// 0 when at least two runs exist and all picked different ids, otherwise
// modal count / n. Throws Error{kDegenerateInput} on an empty list.
Fraction stability(std::span<const std::int64_t> selected_ids);

enum class AttributeMode { kStructural, kNonStructural, kAll };

std::string_view to_string(AttributeMode mode);

// Structural attributes: xpath, x, y, isLeaf and the location alias.
bool is_structural_attribute(std::string_view canonical_name);
bool attribute_in_mode(std::string_view canonical_name, AttributeMode mode);

struct MentionStats {
  std::size_t responses = 0;
  std::size_t mention = 0;  // recognized attributes mentioned
  std::size_t valid = 0;    // mentioned attributes inside the mode's set
  std::size_t correctInMention = 0;
  std::size_t correctInValid = 0;
  std::size_t responsesMentioning = 0;
  std::size_t responsesValid = 0;
  // Unset when the denominator is zero.
  std::optional<double> correctRateTotal;
  std::optional<double> correctRateValid;
  std::optional<double> mentionRate;  // share of responses with >= 1 mention
  std::optional<double> validRate;    // share of responses with >= 1 valid mention
  std::optional<double> meanMentionedPerResponse;
  std::optional<double> meanValidPerResponse;
};

// One entry per response; nullopt marks a malformed response.
MentionStats mention_valid_correct(std::span<const std::optional<ConsistencyReport>> reports, AttributeMode mode);

// Share of decisions selecting the ground-truth element. Selections outside
// the ranking count as misses. Throws Error{kMissingGroundTruth} for an empty
// ground truth and Error{kDegenerateInput} for no decisions.
Fraction gt_selected_rate(std::span<const MatchDecision> decisions, const CandidateRanking& candidates,
                          std::string_view gt_xpath);

// Throws Error{kDegenerateInput} for mismatched lengths, fewer than two
// values, a single class, or constant EC.
double point_biserial(const std::vector<double>& ec_values, const std::vector<bool>& correctness);

enum class CreditMode { kAggregate, kBestOf, kMajority };

std::string_view to_string(CreditMode mode);
CreditMode parse_credit_mode(std::string_view name);

struct RunResult {
  bool matchCorrect = false;
  RepairVerdict verdict = RepairVerdict::kIncorrect;
};

struct Credit {
  bool matching = false;
  bool repair = false;
};

// kBestOf credits any success; kMajority needs strictly more than half the
// runs; kAggregate behaves like kMajority. A run's repair counts only when
// its match is correct too.
Credit best_of_runs(std::span<const RunResult> runs, CreditMode mode);

struct GroundTruthEntry {
  std::string breakageId;
  std::string application;
  std::string targetXpath;
  std::string gtXpath;
};

// Tab-separated: breakageId, application, targetXpath, gtXpath. '#' lines and
// blank lines are skipped. Throws Error{kMalformedGroundTruth}.
std::vector<GroundTruthEntry> parse_ground_truth(std::string_view text);

struct AppCounts {
  std::string application;
  std::size_t breakages = 0;
  std::size_t matchingBefore = 0;
  std::size_t repairBefore = 0;
  std::size_t matchingAfter = 0;
  std::size_t repairAfter = 0;
  std::size_t selfCorrected = 0;
};

struct BreakageMetrics {
  std::string breakageId;
  std::string application;
  std::optional<Fraction> stability;
  std::optional<Fraction> ecBefore;
  std::optional<Fraction> ecAfter;
  std::optional<std::size_t> gtRank;
  bool matchBefore = false;
  bool repairBefore = false;
  bool matchAfter = false;
  bool repairAfter = false;
  bool selfCorrected = false;
  std::string verdict;
  std::string pattern;
  std::size_t errors = 0;
};

struct MetricsReport {
  CreditMode mode = CreditMode::kAggregate;
  std::vector<BreakageMetrics> perBreakage;
  std::vector<AppCounts> perApplication;  // sorted by name
  AppCounts total;
  std::vector<std::pair<std::size_t, std::optional<double>>> hitRatio;
  std::optional<double> stabilityMean;
  MentionStats structural;
  MentionStats nonStructural;
  MentionStats all;
  std::optional<Fraction> gtSelectedRate;
  std::optional<double> rPbi;
  std::string rPbiNote;
  std::optional<double> meanEc;
  std::size_t breakagesWithErrors = 0;
};

// Ground truth from `ground_truth` (keyed by breakageId) takes precedence
// over the xpath stored in each outcome.
MetricsReport build_report(std::span<const BreakageOutcome> outcomes,
                           const std::map<std::string, GroundTruthEntry>& ground_truth,
                           std::span<const std::size_t> k_grid, CreditMode mode = CreditMode::kAggregate);

std::string report_to_json(const MetricsReport& report);
std::string format_report_table(const MetricsReport& report);

}  // namespace uirepair
