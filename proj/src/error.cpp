#include "uirepair/error.h"

namespace uirepair {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyDocument: return "EmptyDocument";
    case ErrorCode::kMalformedLayoutRow: return "MalformedLayoutRow";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kMalformedSnapshot: return "MalformedSnapshot";
    case ErrorCode::kMalformedImage: return "MalformedImage";
    case ErrorCode::kEmptyPage: return "EmptyPage";
    case ErrorCode::kZeroVarianceTemplate: return "ZeroVarianceTemplate";
    case ErrorCode::kTemplateLargerThanImage: return "TemplateLargerThanImage";
    case ErrorCode::kMissingScreenshot: return "MissingScreenshot";
    case ErrorCode::kDegenerateTargetRect: return "DegenerateTargetRect";
    case ErrorCode::kMissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::kTargetNotFound: return "TargetNotFound";
    case ErrorCode::kEmptyCandidates: return "EmptyCandidates";
    case ErrorCode::kNoInconsistency: return "NoInconsistency";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kNoRepairFound: return "NoRepairFound";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kAuthError: return "AuthError";
    case ErrorCode::kTokenLimitError: return "TokenLimitError";
    case ErrorCode::kMalformedMockScript: return "MalformedMockScript";
    case ErrorCode::kUnknownAttribute: return "UnknownAttribute";
    case ErrorCode::kSelectionNotInCandidates: return "SelectionNotInCandidates";
    case ErrorCode::kEmptyExplanation: return "EmptyExplanation";
    case ErrorCode::kUnsupportedSyntax: return "UnsupportedSyntax";
    case ErrorCode::kUnparseableRepair: return "UnparseableRepair";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kDivisionContext: return "DivisionContext";
    case ErrorCode::kMalformedGroundTruth: return "MalformedGroundTruth";
    case ErrorCode::kNoElementsWithProperty: return "NoElementsWithProperty";
    case ErrorCode::kMalformedDiff: return "MalformedDiff";
    case ErrorCode::kMalformedPairing: return "MalformedPairing";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kUsage: return "UsageError";
    case ErrorCode::kMalformedManifest: return "MalformedManifest";
    case ErrorCode::kMalformedOutcomeLog: return "MalformedOutcomeLog";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
      return ErrorCategory::kIo;
    case ErrorCode::kUsage:
    case ErrorCode::kInvalidArgument:
      return ErrorCategory::kUsage;
    case ErrorCode::kTransportError:
    case ErrorCode::kAuthError:
    case ErrorCode::kTokenLimitError:
      return ErrorCategory::kBackend;
    default:
      return ErrorCategory::kData;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace uirepair
