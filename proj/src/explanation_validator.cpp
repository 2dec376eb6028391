#include "uirepair/explanation_validator.h"

#include <algorithm>
#include <limits>

#include "uirepair/error.h"

namespace uirepair {
namespace {

enum class Rule { kLocation, kSize, kLeaf, kString };

struct AttributeRule {
  Rule rule;
  const std::string WebElementRecord::*field = nullptr;
};

AttributeRule rule_for(std::string_view attribute) {
  const auto canonical = canonical_attribute_name(attribute);
  if (!canonical) throw Error(ErrorCode::kUnknownAttribute, "unknown attribute '" + std::string(attribute) + "'");
  const std::string& a = *canonical;
  if (a == "location" || a == "x" || a == "y") return {Rule::kLocation};
  if (a == "size" || a == "width" || a == "height") return {Rule::kSize};
  if (a == "isLeaf") return {Rule::kLeaf};
  if (a == "id") return {Rule::kString, &WebElementRecord::id};
  if (a == "name") return {Rule::kString, &WebElementRecord::name};
  if (a == "class") return {Rule::kString, &WebElementRecord::className};
  if (a == "xpath") return {Rule::kString, &WebElementRecord::xpath};
  if (a == "text") return {Rule::kString, &WebElementRecord::text};
  if (a == "tagName") return {Rule::kString, &WebElementRecord::tagName};
  if (a == "linkText") return {Rule::kString, &WebElementRecord::linkText};
  throw Error(ErrorCode::kUnknownAttribute, "unknown attribute '" + std::string(attribute) + "'");
}

// Distances are compared exactly: squared Euclidean and area difference are
// integers, so ties are detected without rounding.
std::uint64_t distance(const AttributeRule& rule, const WebElementRecord& t, const WebElementRecord& c) {
  switch (rule.rule) {
    case Rule::kLocation: {
      const auto dx = static_cast<__int128>(c.x - t.x);
      const auto dy = static_cast<__int128>(c.y - t.y);
      const __int128 d = dx * dx + dy * dy;
      return d > static_cast<__int128>(std::numeric_limits<std::uint64_t>::max())
                 ? std::numeric_limits<std::uint64_t>::max()
                 : static_cast<std::uint64_t>(d);
    }
    case Rule::kSize: {
      const __int128 diff = static_cast<__int128>(c.width) * c.height - static_cast<__int128>(t.width) * t.height;
      const __int128 mag = diff < 0 ? -diff : diff;
      return mag > static_cast<__int128>(std::numeric_limits<std::uint64_t>::max())
                 ? std::numeric_limits<std::uint64_t>::max()
                 : static_cast<std::uint64_t>(mag);
    }
    case Rule::kLeaf: return c.isLeaf == t.isLeaf ? 0 : 1;
    case Rule::kString: return levenshtein(t.*rule.field, c.*rule.field);
  }
  return 0;
}

}  // namespace

Fraction ConsistencyReport::ec_value() const {
  if (!ec) throw Error(ErrorCode::kEmptyExplanation, "explanation mentions no recognized attribute");
  return *ec;
}

std::set<std::int64_t> most_similar_set(std::string_view attribute, const WebElementRecord& target,
                                        std::span<const WebElementRecord> candidates) {
  const AttributeRule rule = rule_for(attribute);
  if (candidates.empty()) throw Error(ErrorCode::kEmptyCandidates, "candidate list is empty");
  if (rule.rule == Rule::kLeaf) {
    // Equality, not nearest: a candidate either shares the flag or it does not.
    std::set<std::int64_t> out;
    for (const auto& c : candidates) {
      if (c.isLeaf == target.isLeaf) out.insert(c.numericId);
    }
    return out;
  }
  std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
  std::set<std::int64_t> out;
  for (const auto& c : candidates) {
    const std::uint64_t d = distance(rule, target, c);
    if (d < best) {
      best = d;
      out.clear();
    }
    if (d == best) out.insert(c.numericId);
  }
  return out;
}

std::set<std::int64_t> most_similar_set(std::string_view attribute, const WebElementRecord& target,
                                        const CandidateRanking& candidates) {
  std::vector<WebElementRecord> elements;
  elements.reserve(candidates.entries.size());
  for (const auto& e : candidates.entries) elements.push_back(e.element);
  return most_similar_set(attribute, target, elements);
}

ConsistencyReport explanation_consistency(const MatchDecision& decision, const WebElementRecord& target,
                                          const CandidateRanking& candidates) {
  if (candidates.find(decision.selectedNumericId) == nullptr) {
    throw Error(ErrorCode::kSelectionNotInCandidates,
                "numericId " + std::to_string(decision.selectedNumericId) + " is not among the candidates");
  }
  std::vector<WebElementRecord> elements;
  elements.reserve(candidates.entries.size());
  for (const auto& e : candidates.entries) elements.push_back(e.element);

  ConsistencyReport report;
  report.selectedNumericId = decision.selectedNumericId;
  report.unrecognizedAttributes = decision.unrecognizedAttributes;
  std::int64_t consistent = 0;
  for (const auto& attribute : decision.mentionedAttributes) {
    if (!canonical_attribute_name(attribute)) {
      report.unrecognizedAttributes.push_back(attribute);
      continue;
    }
    AttributeConsistency entry{attribute, false, most_similar_set(attribute, target, elements)};
    entry.consistent = entry.mostSimilarIds.contains(decision.selectedNumericId);
    if (entry.consistent) {
      ++consistent;
    } else {
      report.inconsistentAttributes.push_back(attribute);
    }
    report.perAttribute.push_back(std::move(entry));
  }
  report.mentionedCount = report.perAttribute.size();
  if (report.mentionedCount > 0) report.ec = Fraction(consistent, static_cast<std::int64_t>(report.mentionedCount));
  return report;
}

bool should_self_correct(const ConsistencyReport& report, std::optional<bool> evaluation_correctness) {
  if (!report.ec) return false;
  const bool below_one = *report.ec < Fraction(1);
  if (evaluation_correctness) return !*evaluation_correctness && below_one;
  return below_one;
}

}  // namespace uirepair
