#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uirepair/dom_snapshot.h"
#include "uirepair/evaluation.h"
#include "uirepair/llm_bridge.h"
#include "uirepair/matchers.h"
#include "uirepair/outcome.h"

namespace uirepair {

struct BreakageCase {
  std::string breakageId;
  std::string application;
  std::shared_ptr<const PageSnapshot> oldSnapshot;
  std::shared_ptr<const PageSnapshot> newSnapshot;
  std::string brokenStatement;
  std::string targetXpath;
  MatcherAlgorithm matcher = MatcherAlgorithm::kEditDistance;
  std::optional<std::string> groundTruthXpath;
};

struct PipelineConfig {
  RunConfig llm;
  std::size_t candidateK = kDefaultCandidateCount;
  bool selfCorrect = true;
  // Use ground truth (when a case has it) to decide whether to self-correct,
  // and request one repair per run so best-of credit can be computed.
  bool evaluationMode = false;
  bool perRunRepair = false;

  // Throws Error{kInvalidArgument}.
  void validate() const;
};

// JSON lines, one case per line:
//   {"id", "app", "old", "new", "target_xpath", "statement",
//    optional "matcher", "gt_xpath", "old_layout", "new_layout",
//    "old_screenshot", "new_screenshot"}
// Relative paths resolve against base_dir. Pages referenced by several cases
// are loaded once and shared. Throws Error{kMalformedManifest} or load errors.
std::vector<BreakageCase> parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                                         MatcherAlgorithm default_matcher = MatcherAlgorithm::kEditDistance);
std::vector<BreakageCase> load_manifest(const std::filesystem::path& path,
                                        MatcherAlgorithm default_matcher = MatcherAlgorithm::kEditDistance);

// Never throws: failures of each stage are recorded in the outcome.
BreakageOutcome run_breakage(const BreakageCase& breakage, const PipelineConfig& config, ChatBackend& backend);

struct BatchResult {
  std::vector<BreakageOutcome> outcomes;  // input order
  MetricsReport report;
};

inline constexpr std::size_t kDefaultHitRatioGrid[] = {1, 3, 5, 10};

// Each case talks to its own backend session. Throws Error{kInvalidArgument}
// when parallelism is 0.
BatchResult run_batch(std::span<const BreakageCase> cases, const PipelineConfig& config, ChatBackend& backend,
                      std::size_t parallelism, CreditMode mode = CreditMode::kAggregate);

}  // namespace uirepair
