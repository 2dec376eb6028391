#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace uirepair {

// Minimal DOM produced by the lenient HTML parser. Only what element
// extraction needs: element/text nodes, attributes and parent links.
struct DomNode {
  enum class Kind { kDocument, kElement, kText };

  Kind kind = Kind::kElement;
  std::string tag;   // lowercase; empty for text and document nodes
  std::string text;  // text nodes only, entities decoded
  bool raw_text = false;  // script/style content, never part of visible text
  std::vector<std::pair<std::string, std::string>> attributes;
  DomNode* parent = nullptr;
  std::vector<std::unique_ptr<DomNode>> children;

  bool is_element() const { return kind == Kind::kElement; }
  std::optional<std::string_view> attribute(std::string_view name) const;
  std::vector<const DomNode*> element_children() const;
};

class DomDocument {
 public:
  DomDocument();
  DomDocument(DomDocument&&) noexcept = default;
  DomDocument& operator=(DomDocument&&) noexcept = default;

  const DomNode& root() const { return *root_; }
  DomNode& root() { return *root_; }

  // The first element child of the document node, normally <html>.
  const DomNode* document_element() const;

  // Element nodes in pre-order (document order).
  std::vector<const DomNode*> elements() const;

 private:
  std::unique_ptr<DomNode> root_;
};

// Lenient parse. Never fails: malformed markup is repaired the way browsers
// commonly do (implied <html>/<body>, implied end tags, implied <tbody>).
DomDocument parse_html_document(std::string_view html);

// Absolute path such as "/html[1]/body[1]/div[2]"; each index counts only
// preceding siblings with the same tag, starting at 1.
std::string compute_xpath(const DomNode& node);

// Visible text of the subtree, whitespace collapsed and trimmed. Script and
// style content is skipped; block-level boundaries separate words.
std::string subtree_text(const DomNode& node);

// Collapse runs of ASCII whitespace to single spaces and trim both ends.
std::string normalize_whitespace(std::string_view text);

}  // namespace uirepair
