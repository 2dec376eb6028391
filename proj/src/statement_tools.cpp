#include "uirepair/statement_tools.h"

#include <cctype>
#include <memory>

#include "uirepair/error.h"

namespace uirepair {
namespace {

struct Token {
  enum class Kind { kIdent, kString, kNumber, kPunct, kEnd };
  Kind kind = Kind::kEnd;
  std::string_view text;  // raw source slice
  std::string value;      // decoded string literal
  std::size_t offset = 0;
};

[[noreturn]] void unsupported(std::string_view source, const std::string& why) {
  throw Error(ErrorCode::kUnsupportedSyntax, why + " in '" + std::string(source) + "'");
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.offset = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      std::size_t j = i + 1;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '$')) ++j;
      t.kind = Token::Kind::kIdent;
      t.text = src.substr(i, j - i);
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i + 1;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = Token::Kind::kNumber;
      t.text = src.substr(i, j - i);
      i = j;
    } else if (c == '"') {
      std::size_t j = i + 1;
      std::string value;
      bool closed = false;
      while (j < src.size()) {
        const char d = src[j];
        if (d == '"') {
          closed = true;
          ++j;
          break;
        }
        if (d == '\n') break;
        if (d == '\\') {
          if (j + 1 >= src.size()) break;
          const char e = src[j + 1];
          switch (e) {
            case 'n': value += '\n'; break;
            case 't': value += '\t'; break;
            case 'r': value += '\r'; break;
            case 'b': value += '\b'; break;
            case 'f': value += '\f'; break;
            case '0': value += '\0'; break;
            case '"':
            case '\'':
            case '\\': value += e; break;
            default: unsupported(src, "unsupported escape sequence");
          }
          j += 2;
          continue;
        }
        value += d;
        ++j;
      }
      if (!closed) unsupported(src, "unterminated string literal");
      t.kind = Token::Kind::kString;
      t.text = src.substr(i, j - i);
      t.value = std::move(value);
      i = j;
    } else if (std::string_view(".(),;=").find(c) != std::string_view::npos) {
      t.kind = Token::Kind::kPunct;
      t.text = src.substr(i, 1);
      ++i;
    } else {
      unsupported(src, std::string("unexpected character '") + c + "'");
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.offset = src.size();
  out.push_back(end);
  return out;
}

std::optional<AssertionKind> assertion_kind(std::string_view name) {
  if (name == "assertEquals") return AssertionKind::kAssertEquals;
  if (name == "assertTrue") return AssertionKind::kAssertTrue;
  if (name == "assertFalse") return AssertionKind::kAssertFalse;
  return std::nullopt;
}

// An operand as parsed, before canonicalization. `equals_arg` is set for
// "x.equals(y)".
struct ParsedOperand {
  Operand operand;
  std::optional<std::size_t> locator;  // index into TestStatement::locators
  std::optional<std::string> method;
  std::vector<std::string> args;
  std::shared_ptr<ParsedOperand> equals_arg;
};

class Parser {
 public:
  explicit Parser(std::string_view source) : src_(source), toks_(tokenize(source)) {}

  TestStatement parse() {
    TestStatement st;
    st.raw = std::string(src_);
    if (peek().kind == Token::Kind::kIdent && peek(1).kind == Token::Kind::kIdent && is_punct(peek(2), "=")) {
      st.declaredType = std::string(next().text);
      st.declaredVariable = std::string(next().text);
      next();
    }
    if (starts_assertion()) {
      parse_assertion(st);
    } else {
      ParsedOperand chain = parse_operand(st);
      if (chain.equals_arg) unsupported(src_, "bare equals() call");
      st.actionMethod = chain.method;
      st.actionArgs = chain.args;
    }
    if (is_punct(peek(), ";")) next();
    if (peek().kind != Token::Kind::kEnd) unsupported(src_, "trailing tokens after statement");
    if (st.locators.empty() && !st.assertionKind) unsupported(src_, "statement has neither a locator nor an assertion");
    build_skeleton(st);
    return st;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  static bool is_punct(const Token& t, std::string_view p) { return t.kind == Token::Kind::kPunct && t.text == p; }
  static bool is_ident(const Token& t, std::string_view name) {
    return t.kind == Token::Kind::kIdent && t.text == name;
  }
  void expect_punct(std::string_view p) {
    if (!is_punct(peek(), p)) unsupported(src_, "expected '" + std::string(p) + "'");
    next();
  }
  std::string expect_ident() {
    if (peek().kind != Token::Kind::kIdent) unsupported(src_, "expected identifier");
    return std::string(next().text);
  }

  bool starts_assertion() const {
    if (is_ident(peek(), "Assert") && is_punct(peek(1), ".")) return assertion_kind(peek(2).text).has_value();
    return peek().kind == Token::Kind::kIdent && assertion_kind(peek().text) && is_punct(peek(1), "(");
  }

  // Literal-only argument list; the opening parenthesis is consumed.
  std::vector<std::string> parse_literal_args() {
    std::vector<std::string> args;
    if (is_punct(peek(), ")")) {
      next();
      return args;
    }
    while (true) {
      if (peek().kind != Token::Kind::kString) unsupported(src_, "only string-literal arguments are supported");
      args.push_back(next().value);
      if (is_punct(peek(), ")")) {
        next();
        return args;
      }
      expect_punct(",");
    }
  }

  LocatorSpec parse_by() {
    if (!is_ident(peek(), "By")) unsupported(src_, "findElement argument must be a By locator");
    next();
    expect_punct(".");
    const Token& strategy = peek();
    if (strategy.kind != Token::Kind::kIdent) unsupported(src_, "expected locator strategy");
    const auto parsed = parse_locator_strategy(strategy.text);
    if (!parsed) unsupported(src_, "unsupported locator strategy '" + std::string(strategy.text) + "'");
    LocatorSpec spec;
    spec.strategy = *parsed;
    spec.strategySpan = {strategy.offset, strategy.text.size()};
    next();
    expect_punct("(");
    if (peek().kind != Token::Kind::kString) unsupported(src_, "locator value must be a string literal");
    const Token& lit = next();
    spec.value = lit.value;
    spec.literalSpan = {lit.offset, lit.text.size()};
    if (spec.value.empty()) unsupported(src_, "empty locator value");
    expect_punct(")");
    return spec;
  }

  static std::string call_text(const std::string& method, const std::vector<std::string>& args) {
    std::string out = method + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i > 0) out += ", ";
      out += java_string_literal(args[i]);
    }
    return out + ")";
  }

  ParsedOperand parse_operand(TestStatement& st) {
    ParsedOperand op;
    if (peek().kind == Token::Kind::kString) {
      op.operand = {Operand::Kind::kLiteral, next().value};
      return op;
    }
    const std::string receiver = expect_ident();
    if (is_punct(peek(), ".") && (is_ident(peek(1), "findElement") || is_ident(peek(1), "findElements"))) {
      next();
      if (next().text == "findElements") unsupported(src_, "findElements is not supported");
      expect_punct("(");
      st.locators.push_back(parse_by());
      op.locator = st.locators.size() - 1;
      expect_punct(")");
      op.operand.kind = Operand::Kind::kElement;
    } else {
      op.operand = {Operand::Kind::kVariable, receiver};
    }
    if (is_punct(peek(), ".") && !is_ident(peek(1), "equals")) {
      next();
      const std::string method = expect_ident();
      if (method == "findElement" || method == "findElements") unsupported(src_, "chained findElement");
      expect_punct("(");
      op.method = method;
      op.args = parse_literal_args();
      if (op.operand.kind == Operand::Kind::kElement) {
        op.operand.text = call_text(method, op.args);
      } else {
        op.operand.text += "." + call_text(method, op.args);
      }
    }
    if (is_punct(peek(), ".") && is_ident(peek(1), "equals")) {
      next();
      next();
      expect_punct("(");
      op.equals_arg = std::make_shared<ParsedOperand>(parse_operand(st));
      if (op.equals_arg->equals_arg) unsupported(src_, "nested equals()");
      expect_punct(")");
    }
    if (is_punct(peek(), ".")) unsupported(src_, "unsupported call chain");
    return op;
  }

  void record_element_action(TestStatement& st, const ParsedOperand& op) {
    if (op.locator && !st.actionMethod) {
      st.actionMethod = op.method;
      st.actionArgs = op.args;
    }
  }

  static CanonicalAssertion equality(const ParsedOperand& a, const ParsedOperand& b) {
    CanonicalAssertion c;
    c.kind = CanonicalAssertion::Kind::kEquals;
    if (b.operand.kind == Operand::Kind::kLiteral && a.operand.kind != Operand::Kind::kLiteral) {
      c.expected = b.operand;
      c.actual = a.operand;
    } else {
      c.expected = a.operand;
      c.actual = b.operand;
    }
    return c;
  }

  void parse_assertion(TestStatement& st) {
    if (is_ident(peek(), "Assert")) {
      next();
      next();
    }
    const AssertionKind kind = *assertion_kind(next().text);
    st.assertionKind = kind;
    expect_punct("(");
    std::vector<ParsedOperand> args;
    if (!is_punct(peek(), ")")) {
      while (true) {
        args.push_back(parse_operand(st));
        if (is_punct(peek(), ")")) break;
        expect_punct(",");
      }
    }
    expect_punct(")");
    for (const auto& a : args) {
      record_element_action(st, a);
      if (a.equals_arg) record_element_action(st, *a.equals_arg);
    }
    CanonicalAssertion canonical;
    if (kind == AssertionKind::kAssertEquals) {
      if (args.size() != 2 || args[0].equals_arg || args[1].equals_arg) {
        unsupported(src_, "assertEquals needs two plain arguments");
      }
      canonical = equality(args[0], args[1]);
    } else {
      if (args.size() != 1) unsupported(src_, "assertTrue/assertFalse need one argument");
      const ParsedOperand& a = args[0];
      if (a.equals_arg && kind == AssertionKind::kAssertTrue) {
        canonical = equality(*a.equals_arg, a);
      } else {
        canonical.kind =
            kind == AssertionKind::kAssertTrue ? CanonicalAssertion::Kind::kTrue : CanonicalAssertion::Kind::kFalse;
        canonical.actual = a.operand;
        if (a.equals_arg) canonical.actual.text += ".equals(" + a.equals_arg->operand.text + ")";
      }
    }
    if (canonical.expected && canonical.expected->kind == Operand::Kind::kLiteral) {
      st.assertionExpected = canonical.expected->text;
    }
    st.assertion = std::move(canonical);
  }

  void build_skeleton(TestStatement& st) const {
    const std::optional<std::size_t> masked =
        st.locators.empty() ? std::nullopt : std::optional<std::size_t>(st.locators.front().literalSpan.offset);
    std::size_t last = toks_.size() - 1;  // kEnd
    if (last > 0 && is_punct(toks_[last - 1], ";")) --last;
    for (std::size_t i = 0; i < last; ++i) {
      if (i > 0) st.skeleton += ' ';
      st.skeleton += masked && toks_[i].offset == *masked ? std::string("\x01") : std::string(toks_[i].text);
    }
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::string normalize_spaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

const std::string* reference_attribute(LocatorStrategy strategy, const WebElementRecord& e) {
  switch (strategy) {
    case LocatorStrategy::kXpath: return &e.xpath;
    case LocatorStrategy::kId: return &e.id;
    case LocatorStrategy::kName: return &e.name;
    case LocatorStrategy::kClassName: return &e.className;
    case LocatorStrategy::kLinkText: return &e.linkText;
    case LocatorStrategy::kCssSelector: return nullptr;
  }
  return nullptr;
}

enum class Preservation { kPreserved, kChanged, kUnknownRewrite };

Preservation compare_intent(const TestStatement& original, const TestStatement& repaired,
                            const WebElementRecord& reference, std::string& note) {
  if (original.declaredVariable != repaired.declaredVariable || original.declaredType != repaired.declaredType) {
    note = "declaration changed";
    return Preservation::kChanged;
  }
  if (original.assertion.has_value() != repaired.assertion.has_value()) {
    note = original.assertion ? "assertion removed" : "assertion added";
    return Preservation::kChanged;
  }
  if (original.assertion) {
    const CanonicalAssertion& a = *original.assertion;
    const CanonicalAssertion& b = *repaired.assertion;
    if (a.kind != b.kind || a.actual != b.actual || a.expected.has_value() != b.expected.has_value()) {
      note = "assertion rewritten";
      return Preservation::kUnknownRewrite;
    }
    if (a.expected != b.expected) {
      const bool updated_to_page = b.expected->kind == Operand::Kind::kLiteral &&
                                   a.expected->kind == Operand::Kind::kLiteral &&
                                   b.expected->text == reference.text;
      if (!updated_to_page) {
        note = "assertion expected value changed";
        return Preservation::kChanged;
      }
      note = "assertion expected value updated to the element text";
    }
    return Preservation::kPreserved;
  }
  if (original.actionMethod != repaired.actionMethod || original.actionArgs != repaired.actionArgs) {
    note = "action or its arguments changed";
    return Preservation::kChanged;
  }
  return Preservation::kPreserved;
}

}  // namespace

std::string_view to_string(LocatorStrategy strategy) {
  switch (strategy) {
    case LocatorStrategy::kXpath: return "xpath";
    case LocatorStrategy::kId: return "id";
    case LocatorStrategy::kName: return "name";
    case LocatorStrategy::kClassName: return "className";
    case LocatorStrategy::kLinkText: return "linkText";
    case LocatorStrategy::kCssSelector: return "cssSelector";
  }
  return "xpath";
}

std::optional<LocatorStrategy> parse_locator_strategy(std::string_view name) {
  if (name == "xpath") return LocatorStrategy::kXpath;
  if (name == "id") return LocatorStrategy::kId;
  if (name == "name") return LocatorStrategy::kName;
  if (name == "className") return LocatorStrategy::kClassName;
  if (name == "linkText") return LocatorStrategy::kLinkText;
  if (name == "cssSelector") return LocatorStrategy::kCssSelector;
  return std::nullopt;
}

std::string_view to_string(AssertionKind kind) {
  switch (kind) {
    case AssertionKind::kAssertEquals: return "assertEquals";
    case AssertionKind::kAssertTrue: return "assertTrue";
    case AssertionKind::kAssertFalse: return "assertFalse";
  }
  return "assertEquals";
}

std::string_view to_string(FixPattern pattern) {
  switch (pattern) {
    case FixPattern::kModifyLocatorValue: return "MODIFY_LOCATOR_VALUE";
    case FixPattern::kModifyAssertionValue: return "MODIFY_ASSERTION_VALUE";
    case FixPattern::kDifferentAssertionAndValue: return "DIFFERENT_ASSERTION_AND_VALUE";
    case FixPattern::kDifferentLocatorAndValue: return "DIFFERENT_LOCATOR_AND_VALUE";
    case FixPattern::kMultiStatement: return "MULTI_STATEMENT";
    case FixPattern::kUnclassified: return "UNCLASSIFIED";
  }
  return "UNCLASSIFIED";
}

std::string_view to_string(RepairVerdict verdict) {
  switch (verdict) {
    case RepairVerdict::kCorrect: return "CORRECT";
    case RepairVerdict::kIncorrect: return "INCORRECT";
    case RepairVerdict::kNeedsManualReview: return "NEEDS_MANUAL_REVIEW";
  }
  return "INCORRECT";
}

TestStatement parse_statement(std::string_view source) { return Parser(source).parse(); }

std::string java_string_literal(std::string_view value) {
  std::string out = "\"";
  for (char c : value) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\0': out += "\\0"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string generate_repair(const TestStatement& statement, const WebElementRecord& element) {
  if (statement.locators.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "statement has no locator to repair");
  }
  if (element.xpath.empty()) throw Error(ErrorCode::kInvalidArgument, "element has no xpath");
  const LocatorSpec& loc = statement.locators.front();
  if (loc.strategy == LocatorStrategy::kXpath && loc.value == element.xpath) return statement.raw;
  std::string out = statement.raw;
  out.replace(loc.literalSpan.offset, loc.literalSpan.length, java_string_literal(element.xpath));
  out.replace(loc.strategySpan.offset, loc.strategySpan.length, "xpath");
  return out;
}

FixPattern classify_fix_pattern(const TestStatement& original, std::span<const TestStatement> repaired) {
  if (repaired.size() > 1) return FixPattern::kMultiStatement;
  if (repaired.empty()) return FixPattern::kUnclassified;
  const TestStatement& r = repaired.front();
  const bool both_locate = !original.locators.empty() && !r.locators.empty();
  const bool same_strategy = both_locate && original.locators.front().strategy == r.locators.front().strategy;
  if (same_strategy && original.skeleton == r.skeleton) return FixPattern::kModifyLocatorValue;
  if (original.assertionKind && r.assertionKind) {
    if (*original.assertionKind != *r.assertionKind) return FixPattern::kDifferentAssertionAndValue;
    if (original.assertionExpected != r.assertionExpected) return FixPattern::kModifyAssertionValue;
  }
  if (both_locate && !same_strategy) return FixPattern::kDifferentLocatorAndValue;
  return FixPattern::kUnclassified;
}

RepairAssessment assess_repair(std::string_view original, std::span<const std::string> repaired,
                               const WebElementRecord& reference) {
  const TestStatement orig = parse_statement(original);
  RepairAssessment out;
  if (repaired.empty()) {
    out.note = "no repaired statement";
    return out;
  }
  out.addedStatements = repaired.size() - 1;

  std::vector<TestStatement> parsed;
  bool all_parsed = true;
  for (const auto& s : repaired) {
    try {
      parsed.push_back(parse_statement(s));
    } catch (const Error&) {
      all_parsed = false;
    }
  }
  const auto locator_check = [&](const TestStatement& st) {
    if (st.locators.empty()) return;
    const LocatorSpec& loc = st.locators.front();
    out.locatorStrategyChanged = orig.locators.empty() || orig.locators.front().strategy != loc.strategy;
    const std::string* want = reference_attribute(loc.strategy, reference);
    out.locatorValueCorrect = want != nullptr && !want->empty() && *want == loc.value;
  };

  if (repaired.size() > 1) {
    out.fixPattern = FixPattern::kMultiStatement;
    for (const auto& st : parsed) {
      if (!st.locators.empty()) {
        locator_check(st);
        break;
      }
    }
    out.verdict = RepairVerdict::kNeedsManualReview;
    out.note = "repair spans several statements";
    return out;
  }
  if (!all_parsed) {
    out.verdict = RepairVerdict::kNeedsManualReview;
    out.note = "repaired statement could not be parsed";
    return out;
  }
  const TestStatement& rep = parsed.front();
  out.fixPattern = classify_fix_pattern(orig, parsed);
  out.noOp = normalize_spaces(orig.raw) == normalize_spaces(rep.raw) ||
             (orig.skeleton == rep.skeleton && !orig.locators.empty() && !rep.locators.empty() &&
              orig.locators.front().strategy == rep.locators.front().strategy &&
              orig.locators.front().value == rep.locators.front().value);
  if (rep.locators.empty()) {
    out.note = "repaired statement has no locator";
    return out;
  }
  locator_check(rep);
  const Preservation p = compare_intent(orig, rep, reference, out.note);
  out.nonLocatorPreserved = p == Preservation::kPreserved;
  if (rep.locators.front().strategy == LocatorStrategy::kCssSelector) {
    out.verdict = RepairVerdict::kNeedsManualReview;
    out.note = "cssSelector locators cannot be checked against the element record";
  } else if (!out.locatorValueCorrect) {
    out.verdict = RepairVerdict::kIncorrect;
    if (out.note.empty()) out.note = "locator does not identify the reference element";
  } else if (p == Preservation::kPreserved) {
    out.verdict = RepairVerdict::kCorrect;
  } else if (p == Preservation::kUnknownRewrite) {
    out.verdict = RepairVerdict::kNeedsManualReview;
  } else {
    out.verdict = RepairVerdict::kIncorrect;
  }
  return out;
}

}  // namespace uirepair
