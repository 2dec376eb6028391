#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uirepair {

// Every failure the library reports carries one of these codes. The CLI maps
// the code's category onto a process exit status.
enum class ErrorCode {
  // dom_snapshot
  kEmptyDocument,
  kMalformedLayoutRow,
  kMalformedRecord,
  kMalformedSnapshot,
  kMalformedImage,
  // matchers
  kEmptyPage,
  kZeroVarianceTemplate,
  kTemplateLargerThanImage,
  kMissingScreenshot,
  kDegenerateTargetRect,
  kMissingGroundTruth,
  kTargetNotFound,
  // llm_bridge
  kEmptyCandidates,
  kNoInconsistency,
  kMalformedResponse,
  kNoRepairFound,
  kTransportError,
  kAuthError,
  kTokenLimitError,
  kMalformedMockScript,
  // explanation_validator
  kUnknownAttribute,
  kSelectionNotInCandidates,
  kEmptyExplanation,
  // statement_tools
  kUnsupportedSyntax,
  kUnparseableRepair,
  // evaluation
  kDegenerateInput,
  kDivisionContext,
  kMalformedGroundTruth,
  // evolution_analyzer
  kNoElementsWithProperty,
  kMalformedDiff,
  kMalformedPairing,
  // plumbing
  kIo,
  kUsage,
  kMalformedManifest,
  kMalformedOutcomeLog,
  kInvalidArgument,
};

enum class ErrorCategory { kUsage, kIo, kBackend, kData };

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }
  ErrorCategory category() const { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace uirepair
