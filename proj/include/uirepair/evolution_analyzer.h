#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uirepair/dom_snapshot.h"
#include "uirepair/fraction.h"

namespace uirepair {

enum class ElementProperty { kId, kText, kXpath, kTag, kClass, kStructure };

inline constexpr ElementProperty kAllElementProperties[] = {ElementProperty::kId,  ElementProperty::kText,
                                                           ElementProperty::kXpath, ElementProperty::kTag,
                                                           ElementProperty::kClass, ElementProperty::kStructure};

std::string_view to_string(ElementProperty property);
// Throws Error{kInvalidArgument}.
ElementProperty parse_element_property(std::string_view name);

struct ElementPairing {
  WebElementRecord oldElement;
  std::optional<WebElementRecord> newElement;
  std::set<ElementProperty> changedProperties;
};

// id, text and class count when non-empty on either version; tag, xpath and
// structure are always present.
bool possesses(const ElementPairing& pairing, ElementProperty property);

// Changed / possessing, over paired elements only.
// Throws Error{kNoElementsWithProperty}.
Fraction change_ratio(std::span<const ElementPairing> pairings, ElementProperty property);

struct XpathPairing {
  std::string oldXpath;
  std::optional<std::string> newXpath;  // unset for NONE
  // Third column, when given, overrides the derived change set.
  std::optional<std::set<ElementProperty>> declaredChanges;
};

// Tab-separated rows: old xpath, new xpath or NONE, optional comma-separated
// changed properties. Throws Error{kMalformedPairing}.
std::vector<XpathPairing> parse_pairing_file(std::string_view text);

// Resolves xpaths against both snapshots and derives changed properties.
// Structure counts as changed when the old parent's partner is not the new
// element's parent; a parent without a labeled partner is compared by xpath.
// Throws Error{kMalformedPairing} when an xpath does not resolve.
std::vector<ElementPairing> derive_pairings(const PageSnapshot& old_snapshot, const PageSnapshot& new_snapshot,
                                            std::span<const XpathPairing> rows);

// One row per property: name, changed, possessing, ratio.
std::string format_change_ratio_table(std::span<const ElementPairing> pairings);

enum class ChunkKind { kAdded, kDeleted, kModified };
enum class RepairType { kI, kII, kIII, kIV, kV, kVI };

std::string_view to_string(ChunkKind kind);
std::string_view to_string(RepairType type);

struct DiffChunk {
  std::string file;
  ChunkKind kind = ChunkKind::kAdded;
  std::vector<std::string> lines;  // each keeps its '+' or '-' marker
  std::set<RepairType> types;
};

// Blank and comment lines are dropped first. Runs of '+' or '-' lines form
// chunks; two neighbouring runs of opposite sign inside one hunk, separated
// by nothing but context, merge into a modified chunk. Each chunk comes back
// classified. Throws Error{kMalformedDiff}.
std::vector<DiffChunk> split_diff_chunks(std::string_view unified_diff);

// I: a modified chunk with two or more distinct locators (By.* or @FindBy).
// II / III: an added / deleted chunk with an event call.
// IV: a modified chunk with two or more distinct event methods.
// V: "assert" anywhere. VI: sleep, implicitlyWait or refresh anywhere.
std::set<RepairType> classify_chunk(const DiffChunk& chunk);

std::string format_repair_type_table(std::span<const DiffChunk> chunks);

struct TestComplexity {
  std::size_t loc = 0;
  std::size_t events = 0;

  friend bool operator==(const TestComplexity&, const TestComplexity&) = default;
};

// Non-blank, non-comment lines and event-method calls in one source unit.
TestComplexity test_complexity(std::string_view source);

}  // namespace uirepair
