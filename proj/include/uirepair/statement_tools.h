#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uirepair/dom_snapshot.h"

namespace uirepair {

enum class LocatorStrategy { kXpath, kId, kName, kClassName, kLinkText, kCssSelector };

std::string_view to_string(LocatorStrategy strategy);
std::optional<LocatorStrategy> parse_locator_strategy(std::string_view name);

struct SourceSpan {
  std::size_t offset = 0;
  std::size_t length = 0;
};

struct LocatorSpec {
  LocatorStrategy strategy = LocatorStrategy::kXpath;
  std::string value;
  SourceSpan strategySpan;  // the identifier after "By."
  SourceSpan literalSpan;   // the string literal, quotes included
};

enum class AssertionKind { kAssertEquals, kAssertTrue, kAssertFalse };

std::string_view to_string(AssertionKind kind);

// One side of an assertion.
struct Operand {
  enum class Kind { kLiteral, kElement, kVariable };
  Kind kind = Kind::kLiteral;
  // Literal value, variable name, or "method(args)" applied to the element.
  std::string text;

  friend bool operator==(const Operand&, const Operand&) = default;
};

// Assertion reduced so that assertTrue(x.equals(E)), assertEquals(E, x) and
// assertEquals(x, E) all compare equal.
struct CanonicalAssertion {
  enum class Kind { kEquals, kTrue, kFalse };
  Kind kind = Kind::kEquals;
  std::optional<Operand> expected;
  Operand actual;

  friend bool operator==(const CanonicalAssertion&, const CanonicalAssertion&) = default;
};

struct TestStatement {
  std::string raw;
  std::vector<LocatorSpec> locators;
  std::optional<std::string> actionMethod;
  std::vector<std::string> actionArgs;
  std::optional<AssertionKind> assertionKind;
  std::optional<std::string> assertionExpected;
  std::optional<CanonicalAssertion> assertion;
  std::optional<std::string> declaredType;
  std::optional<std::string> declaredVariable;
  // Token stream with the first locator literal masked, whitespace-free.
  std::string skeleton;
};

// Throws Error{kUnsupportedSyntax}.
TestStatement parse_statement(std::string_view source);

// Java string literal for a value, quotes included.
std::string java_string_literal(std::string_view value);

// Rewrites the first locator to By.xpath(element.xpath). Every byte outside
// the strategy identifier and the literal is kept. Returns the input
// unchanged when it already locates by that xpath.
std::string generate_repair(const TestStatement& statement, const WebElementRecord& element);

enum class FixPattern {
  kModifyLocatorValue,
  kModifyAssertionValue,
  kDifferentAssertionAndValue,
  kDifferentLocatorAndValue,
  kMultiStatement,
  kUnclassified,
};

enum class RepairVerdict { kCorrect, kIncorrect, kNeedsManualReview };

std::string_view to_string(FixPattern pattern);
std::string_view to_string(RepairVerdict verdict);

struct RepairAssessment {
  bool locatorStrategyChanged = false;
  bool locatorValueCorrect = false;
  bool nonLocatorPreserved = false;
  std::size_t addedStatements = 0;
  bool noOp = false;
  FixPattern fixPattern = FixPattern::kUnclassified;
  RepairVerdict verdict = RepairVerdict::kIncorrect;
  std::string note;
};

// Never throws.
FixPattern classify_fix_pattern(const TestStatement& original, std::span<const TestStatement> repaired);

// The original must parse (Error{kUnsupportedSyntax} otherwise). A repaired
// statement that does not parse yields NEEDS_MANUAL_REVIEW.
RepairAssessment assess_repair(std::string_view original, std::span<const std::string> repaired,
                               const WebElementRecord& reference);

}  // namespace uirepair
