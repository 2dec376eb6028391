#include "uirepair/html_dom.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <functional>

namespace uirepair {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool in_list(std::string_view name, std::initializer_list<std::string_view> list) {
  return std::find(list.begin(), list.end(), name) != list.end();
}

bool is_void_element(std::string_view tag) {
  return in_list(tag, {"area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta",
                       "param", "source", "track", "wbr", "keygen"});
}

bool is_head_content(std::string_view tag) {
  return in_list(tag, {"base", "link", "meta", "title", "style", "script", "noscript"});
}

bool is_block_level(std::string_view tag) {
  return in_list(tag, {"address", "article", "aside", "blockquote", "br", "dd", "div", "dl", "dt",
                       "fieldset", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6",
                       "header", "hr", "li", "main", "nav", "ol", "p", "pre", "section", "table",
                       "tbody", "td", "tfoot", "th", "thead", "tr", "ul", "option", "select",
                       "body", "html", "head", "title"});
}

// Start tags that implicitly close an open <p>.
bool closes_paragraph(std::string_view tag) {
  return in_list(tag, {"address", "article", "aside", "blockquote", "div", "dl", "fieldset",
                       "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header",
                       "hr", "main", "nav", "ol", "p", "pre", "section", "table", "ul"});
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF) cp = 0xFFFD;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

struct NamedEntity {
  std::string_view name;
  std::uint32_t code_point;
};

constexpr std::array<NamedEntity, 20> kNamedEntities = {{
    {"amp", '&'},      {"lt", '<'},       {"gt", '>'},       {"quot", '"'},
    {"apos", '\''},    {"nbsp", 0xA0},    {"copy", 0xA9},    {"reg", 0xAE},
    {"hellip", 0x2026}, {"mdash", 0x2014}, {"ndash", 0x2013}, {"laquo", 0xAB},
    {"raquo", 0xBB},   {"middot", 0xB7},  {"times", 0xD7},   {"euro", 0x20AC},
    {"lsquo", 0x2018}, {"rsquo", 0x2019}, {"ldquo", 0x201C}, {"rdquo", 0x201D},
}};

std::string decode_entities(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] != '&') {
      out += in[i];
      continue;
    }
    const std::size_t semi = in.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out += '&';
      continue;
    }
    std::string_view ref = in.substr(i + 1, semi - i - 1);
    if (!ref.empty() && ref[0] == '#') {
      std::uint32_t cp = 0;
      std::from_chars_result res{};
      if (ref.size() > 1 && (ref[1] == 'x' || ref[1] == 'X')) {
        res = std::from_chars(ref.data() + 2, ref.data() + ref.size(), cp, 16);
      } else {
        res = std::from_chars(ref.data() + 1, ref.data() + ref.size(), cp, 10);
      }
      if (res.ec == std::errc() && res.ptr == ref.data() + ref.size()) {
        append_utf8(out, cp);
        i = semi;
        continue;
      }
      out += '&';
      continue;
    }
    auto it = std::find_if(kNamedEntities.begin(), kNamedEntities.end(),
                           [&](const NamedEntity& e) { return e.name == ref; });
    if (it == kNamedEntities.end()) {
      out += '&';
      continue;
    }
    append_utf8(out, it->code_point);
    i = semi;
  }
  return out;
}

struct Token {
  enum class Type { kStartTag, kEndTag, kText, kRawText };
  Type type;
  std::string name;
  std::string data;
  std::vector<std::pair<std::string, std::string>> attributes;
  bool self_closing = false;
};

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view input) : in_(input) {}

  // Streams tokens to the sink; comments, doctypes and processing
  // instructions are dropped.
  void run(const std::function<void(Token&&)>& sink) {
    while (pos_ < in_.size()) {
      if (in_[pos_] == '<') {
        if (starts_with("<!--")) {
          const std::size_t end = in_.find("-->", pos_ + 4);
          pos_ = end == std::string_view::npos ? in_.size() : end + 3;
          continue;
        }
        if (starts_with("<!") || starts_with("<?")) {
          const std::size_t end = in_.find('>', pos_ + 2);
          pos_ = end == std::string_view::npos ? in_.size() : end + 1;
          continue;
        }
        if (starts_with("</") && pos_ + 2 < in_.size() && std::isalpha(static_cast<unsigned char>(in_[pos_ + 2]))) {
          sink(read_end_tag());
          continue;
        }
        if (pos_ + 1 < in_.size() && std::isalpha(static_cast<unsigned char>(in_[pos_ + 1]))) {
          Token tag = read_start_tag();
          const std::string name = tag.name;
          const bool self_closing = tag.self_closing;
          sink(std::move(tag));
          if (!self_closing && in_list(name, {"script", "style", "textarea", "title"})) {
            read_raw_content(name, sink);
          }
          continue;
        }
      }
      const std::size_t next = in_.find('<', pos_ + 1);
      const std::size_t end = next == std::string_view::npos ? in_.size() : next;
      sink(Token{Token::Type::kText, {}, decode_entities(in_.substr(pos_, end - pos_)), {}, false});
      pos_ = end;
    }
  }

 private:
  bool starts_with(std::string_view prefix) const { return in_.substr(pos_, prefix.size()) == prefix; }

  void skip_space() {
    while (pos_ < in_.size() && is_space(in_[pos_])) ++pos_;
  }

  std::string read_name() {
    const std::size_t start = pos_;
    while (pos_ < in_.size() && !is_space(in_[pos_]) && in_[pos_] != '>' && in_[pos_] != '/' &&
           in_[pos_] != '=') {
      ++pos_;
    }
    return to_lower(in_.substr(start, pos_ - start));
  }

  Token read_end_tag() {
    pos_ += 2;
    Token tok{Token::Type::kEndTag, read_name(), {}, {}, false};
    const std::size_t end = in_.find('>', pos_);
    pos_ = end == std::string_view::npos ? in_.size() : end + 1;
    return tok;
  }

  Token read_start_tag() {
    ++pos_;
    Token tok{Token::Type::kStartTag, read_name(), {}, {}, false};
    while (pos_ < in_.size()) {
      skip_space();
      if (pos_ >= in_.size()) break;
      if (in_[pos_] == '>') {
        ++pos_;
        return tok;
      }
      if (in_[pos_] == '/') {
        ++pos_;
        if (pos_ < in_.size() && in_[pos_] == '>') {
          tok.self_closing = true;
          ++pos_;
          return tok;
        }
        continue;
      }
      std::string attr_name = read_name();
      if (attr_name.empty()) {
        ++pos_;  // stray '=' or similar
        continue;
      }
      skip_space();
      std::string value;
      if (pos_ < in_.size() && in_[pos_] == '=') {
        ++pos_;
        skip_space();
        if (pos_ < in_.size() && (in_[pos_] == '"' || in_[pos_] == '\'')) {
          const char quote = in_[pos_++];
          const std::size_t end = in_.find(quote, pos_);
          const std::size_t stop = end == std::string_view::npos ? in_.size() : end;
          value = decode_entities(in_.substr(pos_, stop - pos_));
          pos_ = end == std::string_view::npos ? in_.size() : end + 1;
        } else {
          const std::size_t start = pos_;
          while (pos_ < in_.size() && !is_space(in_[pos_]) && in_[pos_] != '>') ++pos_;
          value = decode_entities(in_.substr(start, pos_ - start));
        }
      }
      const bool seen = std::any_of(tok.attributes.begin(), tok.attributes.end(),
                                    [&](const auto& a) { return a.first == attr_name; });
      if (!seen) tok.attributes.emplace_back(std::move(attr_name), std::move(value));
    }
    return tok;
  }

  void read_raw_content(const std::string& name, const std::function<void(Token&&)>& sink) {
    const std::string closing = "</" + name;
    std::size_t search = pos_;
    std::size_t end = std::string_view::npos;
    while (search < in_.size()) {
      const std::size_t lt = in_.find("</", search);
      if (lt == std::string_view::npos) break;
      if (to_lower(in_.substr(lt, closing.size())) == closing) {
        end = lt;
        break;
      }
      search = lt + 2;
    }
    if (end == std::string_view::npos) end = in_.size();
    std::string_view content = in_.substr(pos_, end - pos_);
    pos_ = end;
    if (content.empty()) return;
    const bool rcdata = name == "textarea" || name == "title";
    sink(Token{rcdata ? Token::Type::kText : Token::Type::kRawText, {},
               rcdata ? decode_entities(content) : std::string(content), {}, false});
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

class TreeBuilder {
 public:
  explicit TreeBuilder(DomNode& document) : document_(document) { stack_.push_back(&document); }

  void process(Token&& tok) {
    switch (tok.type) {
      case Token::Type::kStartTag: start_tag(std::move(tok)); break;
      case Token::Type::kEndTag: end_tag(tok.name); break;
      case Token::Type::kText: text(std::move(tok.data), false); break;
      case Token::Type::kRawText: text(std::move(tok.data), true); break;
    }
  }

 private:
  DomNode* current() { return stack_.back(); }

  DomNode* append_element(const std::string& name,
                          std::vector<std::pair<std::string, std::string>> attributes) {
    auto node = std::make_unique<DomNode>();
    node->kind = DomNode::Kind::kElement;
    node->tag = name;
    node->attributes = std::move(attributes);
    node->parent = current();
    DomNode* raw = node.get();
    current()->children.push_back(std::move(node));
    return raw;
  }

  void ensure_html() {
    if (html_ != nullptr) return;
    html_ = append_element("html", {});
    stack_.push_back(html_);
  }

  void ensure_body() {
    ensure_html();
    if (head_open()) pop_until("head");
    if (body_ != nullptr) return;
    if (current() != html_) return;
    body_ = append_element("body", {});
    stack_.push_back(body_);
  }

  bool head_open() const {
    return std::any_of(stack_.begin(), stack_.end(), [](const DomNode* n) { return n->tag == "head"; });
  }

  // Index of the nearest open element named `name`, not searching past any
  // element in `boundaries`.
  std::optional<std::size_t> find_in_scope(std::string_view name,
                                           std::initializer_list<std::string_view> boundaries) const {
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag == name) return i;
      if (in_list(stack_[i]->tag, boundaries)) return std::nullopt;
    }
    return std::nullopt;
  }

  void pop_to(std::size_t index) { stack_.resize(index); }

  void pop_until(std::string_view name) {
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag == name) {
        pop_to(i);
        return;
      }
    }
  }

  void close_if_open(std::string_view name, std::initializer_list<std::string_view> boundaries) {
    if (auto idx = find_in_scope(name, boundaries)) pop_to(*idx);
  }

  void start_tag(Token&& tok) {
    const std::string& name = tok.name;
    if (name == "html") {
      if (html_ == nullptr) {
        html_ = append_element("html", std::move(tok.attributes));
        stack_.push_back(html_);
      }
      return;
    }
    ensure_html();
    if (name == "head") {
      if (body_ == nullptr && !head_open() && current() == html_) {
        stack_.push_back(append_element("head", std::move(tok.attributes)));
      }
      return;
    }
    if (name == "body") {
      if (body_ == nullptr) {
        if (head_open()) pop_until("head");
        pop_to_html();
        body_ = append_element("body", std::move(tok.attributes));
        stack_.push_back(body_);
      }
      return;
    }
    if (head_open() && !is_head_content(name)) pop_until("head");
    if (current() == html_ && !is_head_content(name)) ensure_body();

    const std::initializer_list<std::string_view> kScope = {"html", "table", "td", "th", "button",
                                                                "caption", "template"};
    if (closes_paragraph(name)) close_if_open("p", kScope);
    if (name == "li") close_if_open("li", {"ul", "ol", "html", "table", "td", "th"});
    if (name == "dt" || name == "dd") {
      close_if_open("dt", {"dl", "html", "table"});
      close_if_open("dd", {"dl", "html", "table"});
    }
    if (name == "option" && current()->tag == "option") stack_.pop_back();
    if (name == "optgroup") {
      if (current()->tag == "option") stack_.pop_back();
      if (current()->tag == "optgroup") stack_.pop_back();
    }
    if (name == "tr") {
      close_if_open("td", {"table", "tr"});
      close_if_open("th", {"table", "tr"});
      close_if_open("tr", {"table", "tbody", "thead", "tfoot"});
      if (current()->tag == "table") stack_.push_back(append_element("tbody", {}));
    }
    if (name == "td" || name == "th") {
      close_if_open("td", {"table", "tr"});
      close_if_open("th", {"table", "tr"});
      if (current()->tag == "table") stack_.push_back(append_element("tbody", {}));
      if (in_list(current()->tag, {"tbody", "thead", "tfoot"})) stack_.push_back(append_element("tr", {}));
    }
    if (in_list(name, {"tbody", "thead", "tfoot"})) {
      for (std::string_view section : {"tbody", "thead", "tfoot"}) close_if_open(section, {"table"});
    }

    DomNode* element = append_element(name, std::move(tok.attributes));
    if (!tok.self_closing && !is_void_element(name)) stack_.push_back(element);
  }

  void pop_to_html() {
    while (stack_.size() > 1 && current() != html_) stack_.pop_back();
  }

  void end_tag(const std::string& name) {
    if (name == "html" || name == "body") return;
    if (name == "head") {
      if (head_open()) pop_until("head");
      return;
    }
    if (is_void_element(name)) return;
    // Cells and rows do not close across their table.
    if (in_list(name, {"td", "th", "tr", "tbody", "thead", "tfoot"})) {
      close_if_open(name, {"table"});
      return;
    }
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag == name) {
        pop_to(i);
        return;
      }
      if (name != "table" && in_list(stack_[i]->tag, {"table", "td", "th"})) return;
    }
  }

  void text(std::string&& data, bool raw) {
    const bool blank = std::all_of(data.begin(), data.end(), is_space);
    if (html_ == nullptr && blank) return;
    if (!blank && !raw) {
      if (head_open() && current()->tag == "head") pop_until("head");
      if (html_ == nullptr || current() == html_) ensure_body();
    }
    if (html_ == nullptr) ensure_html();
    auto node = std::make_unique<DomNode>();
    node->kind = DomNode::Kind::kText;
    node->text = std::move(data);
    node->raw_text = raw;
    node->parent = current();
    current()->children.push_back(std::move(node));
  }

  DomNode& document_;
  std::vector<DomNode*> stack_;
  DomNode* html_ = nullptr;
  DomNode* body_ = nullptr;
};

void collect_text(const DomNode& node, std::string& out) {
  for (const auto& child : node.children) {
    if (child->kind == DomNode::Kind::kText) {
      if (!child->raw_text) out += child->text;
      continue;
    }
    if (!child->is_element()) continue;
    if (child->tag == "script" || child->tag == "style") continue;
    const bool block = is_block_level(child->tag);
    if (block) out += ' ';
    collect_text(*child, out);
    if (block) out += ' ';
  }
}

}  // namespace

std::optional<std::string_view> DomNode::attribute(std::string_view name) const {
  for (const auto& [key, value] : attributes) {
    if (key == name) return std::string_view(value);
  }
  return std::nullopt;
}

std::vector<const DomNode*> DomNode::element_children() const {
  std::vector<const DomNode*> out;
  for (const auto& child : children) {
    if (child->is_element()) out.push_back(child.get());
  }
  return out;
}

DomDocument::DomDocument() : root_(std::make_unique<DomNode>()) {
  root_->kind = DomNode::Kind::kDocument;
}

const DomNode* DomDocument::document_element() const {
  for (const auto& child : root_->children) {
    if (child->is_element()) return child.get();
  }
  return nullptr;
}

std::vector<const DomNode*> DomDocument::elements() const {
  std::vector<const DomNode*> out;
  std::vector<const DomNode*> pending;
  for (auto it = root_->children.rbegin(); it != root_->children.rend(); ++it) pending.push_back(it->get());
  while (!pending.empty()) {
    const DomNode* node = pending.back();
    pending.pop_back();
    if (!node->is_element()) continue;
    out.push_back(node);
    for (auto it = node->children.rbegin(); it != node->children.rend(); ++it) pending.push_back(it->get());
  }
  return out;
}

DomDocument parse_html_document(std::string_view html) {
  DomDocument doc;
  TreeBuilder builder(doc.root());
  Tokenizer(html).run([&](Token&& tok) { builder.process(std::move(tok)); });
  return doc;
}

std::string compute_xpath(const DomNode& node) {
  std::vector<std::string> steps;
  for (const DomNode* cur = &node; cur != nullptr && cur->is_element(); cur = cur->parent) {
    int index = 1;
    if (cur->parent != nullptr) {
      for (const auto& sibling : cur->parent->children) {
        if (sibling.get() == cur) break;
        if (sibling->is_element() && sibling->tag == cur->tag) ++index;
      }
    }
    steps.push_back(cur->tag + "[" + std::to_string(index) + "]");
  }
  std::string path;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    path += '/';
    path += *it;
  }
  return path;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::string subtree_text(const DomNode& node) {
  std::string raw;
  collect_text(node, raw);
  return normalize_whitespace(raw);
}

}  // namespace uirepair
