#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uirepair/dom_snapshot.h"
#include "uirepair/fraction.h"
#include "uirepair/llm_bridge.h"
#include "uirepair/matchers.h"

namespace uirepair {

struct AttributeConsistency {
  std::string attribute;
  bool consistent = false;
  std::set<std::int64_t> mostSimilarIds;
};

struct ConsistencyReport {
  std::int64_t selectedNumericId = 0;
  // Unset when no recognized attribute was mentioned.
  std::optional<Fraction> ec;
  std::vector<AttributeConsistency> perAttribute;
  std::vector<std::string> inconsistentAttributes;
  std::vector<std::string> unrecognizedAttributes;
  std::size_t mentionedCount = 0;

  // Throws Error{kEmptyExplanation} when ec is unset.
  Fraction ec_value() const;
};

// Candidates that are closest to the target on one attribute; ties are all
// kept. "location", "position", "x" and "y" compare (x, y) by Euclidean
// distance, "size", "width" and "height" compare areas, "isLeaf" compares
// for equality, and string attributes use Levenshtein distance.
// Throws Error{kUnknownAttribute} or Error{kEmptyCandidates}.
std::set<std::int64_t> most_similar_set(std::string_view attribute, const WebElementRecord& target,
                                        std::span<const WebElementRecord> candidates);
std::set<std::int64_t> most_similar_set(std::string_view attribute, const WebElementRecord& target,
                                        const CandidateRanking& candidates);

// Throws Error{kSelectionNotInCandidates}.
ConsistencyReport explanation_consistency(const MatchDecision& decision, const WebElementRecord& target,
                                          const CandidateRanking& candidates);

// With known correctness: incorrect and ec < 1. Without: ec < 1. An
// undefined ec never triggers.
bool should_self_correct(const ConsistencyReport& report, std::optional<bool> evaluation_correctness);

}  // namespace uirepair
