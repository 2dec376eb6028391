#include "uirepair/llm_bridge.h"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "uirepair/error.h"

namespace uirepair {
namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string join(std::span<const std::string> parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Splits an attribute clause on commas, '&', '/', and the word "and".
std::vector<std::string> split_attribute_clause(std::string_view clause) {
  std::vector<std::string> parts;
  std::string current;
  for (std::size_t i = 0; i < clause.size(); ++i) {
    const char c = clause[i];
    if (c == ',' || c == '&' || c == '/' || c == ';') {
      parts.push_back(std::move(current));
      current.clear();
      continue;
    }
    if ((c == 'a' || c == 'A') && i + 3 <= clause.size() && lowercase(clause.substr(i, 3)) == "and" &&
        (i == 0 || !is_word_char(clause[i - 1])) && (i + 3 == clause.size() || !is_word_char(clause[i + 3]))) {
      parts.push_back(std::move(current));
      current.clear();
      i += 2;
      continue;
    }
    current += c;
  }
  parts.push_back(std::move(current));
  return parts;
}

std::string clean_attribute_token(std::string_view token) {
  token = trim(token);
  const auto strip = [](char c) { return c == '"' || c == '\'' || c == '`' || c == '*' || c == '(' || c == ')'; };
  while (!token.empty() && strip(token.front())) token.remove_prefix(1);
  while (!token.empty() && strip(token.back())) token.remove_suffix(1);
  token = trim(token);
  for (std::string_view article : {"the ", "its ", "their ", "both ", "same "}) {
    if (token.size() > article.size() && lowercase(token.substr(0, article.size())) == article) {
      token = trim(token.substr(article.size()));
    }
  }
  return std::string(token);
}

// End of the sentence that starts at `from`: a '.' followed by whitespace or
// the end of text, or a newline.
std::size_t sentence_end(std::string_view text, std::size_t from) {
  for (std::size_t i = from; i < text.size(); ++i) {
    if (text[i] == '\n') return i;
    if (text[i] == '.' && (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])) ||
                           text[i + 1] == '"' || text[i + 1] == '\'')) {
      return i;
    }
  }
  return text.size();
}

// Splits Java source into statements on ';' outside string and char literals.
std::vector<std::string> split_statements(std::string_view code) {
  std::vector<std::string> out;
  std::string current;
  char quote = 0;
  const auto flush = [&](bool terminated) {
    // Line breaks inside a statement, with their indentation, become one space.
    std::string collapsed;
    const std::string_view t = trim(current);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] != '\n' && t[i] != '\r') {
        collapsed += t[i];
        continue;
      }
      while (!collapsed.empty() && (collapsed.back() == ' ' || collapsed.back() == '\t')) collapsed.pop_back();
      while (i + 1 < t.size() && std::isspace(static_cast<unsigned char>(t[i + 1]))) ++i;
      collapsed += ' ';
    }
    if (!collapsed.empty()) out.push_back(terminated ? collapsed + ";" : collapsed);
    current.clear();
  };
  for (std::size_t i = 0; i < code.size(); ++i) {
    const char c = code[i];
    if (quote != 0) {
      current += c;
      if (c == '\\' && i + 1 < code.size()) {
        current += code[++i];
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
      current += c;
    } else if (c == ';') {
      flush(true);
    } else {
      current += c;
    }
  }
  flush(false);
  return out;
}

std::string strip_line_comments(std::string_view block) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= block.size()) {
    std::size_t nl = block.find('\n', pos);
    if (nl == std::string_view::npos) nl = block.size();
    const std::string_view line = block.substr(pos, nl - pos);
    const std::string_view t = trim(line);
    if (!t.starts_with("//") && !t.starts_with("```")) {
      out += line;
      out += '\n';
    }
    pos = nl + 1;
  }
  return out;
}

bool mentions_statement_keyword(std::string_view line) {
  return line.find("findElement") != std::string_view::npos || line.find("assert") != std::string_view::npos ||
         line.find("Assert") != std::string_view::npos || line.find("driver.") != std::string_view::npos;
}

[[noreturn]] void throw_backend_error(std::string_view kind, std::string_view detail) {
  if (kind == "transport") throw Error(ErrorCode::kTransportError, std::string(detail));
  if (kind == "auth") throw Error(ErrorCode::kAuthError, std::string(detail));
  if (kind == "token_limit") throw Error(ErrorCode::kTokenLimitError, std::string(detail));
  throw Error(ErrorCode::kMalformedMockScript, "unknown error kind '" + std::string(kind) + "'");
}

}  // namespace

std::string_view to_string(ChatRole role) {
  switch (role) {
    case ChatRole::kSystem: return "system";
    case ChatRole::kUser: return "user";
    case ChatRole::kAssistant: return "assistant";
  }
  return "user";
}

ChatRole parse_chat_role(std::string_view name) {
  if (name == "system") return ChatRole::kSystem;
  if (name == "user") return ChatRole::kUser;
  if (name == "assistant") return ChatRole::kAssistant;
  throw Error(ErrorCode::kInvalidArgument, "unknown chat role '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  if (modelId.empty()) throw Error(ErrorCode::kInvalidArgument, "model id is empty");
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must lie in [0, 2]");
  }
  if (runsPerBreakage < 1) throw Error(ErrorCode::kInvalidArgument, "runs per breakage must be at least 1");
  if (!(requestTimeoutSeconds > 0.0)) throw Error(ErrorCode::kInvalidArgument, "request timeout must be positive");
  if (!(retryBaseDelaySeconds >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "retry delay must be non-negative");
}

ChatPrompt build_matching_prompt(const WebElementRecord& target, const CandidateRanking& candidates) {
  if (candidates.entries.empty()) throw Error(ErrorCode::kEmptyCandidates, "candidate list is empty");
  using namespace prompt_text;
  std::string user;
  user += kP2;
  user += '\n';
  user += kP3;
  user += '\n';
  user += kP8Target;
  user += serialize_element(target);
  user += ">\n";
  user += kP8Candidates;
  for (std::size_t i = 0; i < candidates.entries.size(); ++i) {
    if (i > 0) user += '\n';
    user += serialize_element(candidates.entries[i].element);
  }
  user += '>';
  return {{ChatRole::kSystem, std::string(kP1)}, {ChatRole::kUser, std::move(user)}};
}

ChatPrompt build_repair_prompt(const WebElementRecord& selected, std::string_view broken) {
  if (trim(broken).empty()) throw Error(ErrorCode::kInvalidArgument, "broken statement is empty");
  using namespace prompt_text;
  std::string user;
  user += kP4Prefix;
  user += serialize_element(selected);
  user += kP4Suffix;
  user += '\n';
  user += kP5;
  user += '\n';
  user += kP9;
  user += broken;
  user += '>';
  return {{ChatRole::kSystem, std::string(kP1)}, {ChatRole::kUser, std::move(user)}};
}

ChatPrompt build_self_correction_prompt(std::span<const ChatMessage> previous_prompt, std::string_view previous_answer,
                                        std::span<const std::string> inconsistent_attributes) {
  if (inconsistent_attributes.empty()) {
    throw Error(ErrorCode::kNoInconsistency, "no inconsistent attributes to report");
  }
  using namespace prompt_text;
  std::string user;
  user += kP6Prompt;
  for (std::size_t i = 0; i < previous_prompt.size(); ++i) {
    if (i > 0) user += '\n';
    user += previous_prompt[i].content;
  }
  user += ">\n";
  user += kP6Answer;
  user += previous_answer;
  user += ">\n";
  user += kP7Prefix;
  user += join(inconsistent_attributes, ", ");
  user += kP7Suffix;
  return {{ChatRole::kUser, std::move(user)}};
}

std::string render_prompt(std::span<const ChatMessage> prompt) {
  std::string out;
  for (const auto& m : prompt) {
    out += '[';
    out += to_string(m.role);
    out += "]\n";
    out += m.content;
    out += '\n';
  }
  return out;
}

std::string render_match_answer(std::int64_t numeric_id, std::span<const std::string> attributes) {
  return "The most similar element's numericId: " + std::to_string(numeric_id) +
         ". Because they share the most similar attributes: " + join(attributes, ", ") + ".";
}

std::optional<std::string> canonical_attribute_name(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  static const std::unordered_map<std::string, std::string> kNames = {
      {"id", "id"},
      {"name", "name"},
      {"class", "class"},
      {"classname", "class"},
      {"xpath", "xpath"},
      {"text", "text"},
      {"tagname", "tagName"},
      {"tag", "tagName"},
      {"linktext", "linkText"},
      {"x", "x"},
      {"y", "y"},
      {"width", "width"},
      {"height", "height"},
      {"isleaf", "isLeaf"},
      {"leaf", "isLeaf"},
      {"location", "location"},
      {"position", "location"},
      {"positioncoordinates", "location"},
      {"coordinates", "location"},
      {"size", "size"},
  };
  auto it = kNames.find(key);
  if (it == kNames.end()) return std::nullopt;
  return it->second;
}

MatchDecision parse_match_response(std::string_view text) {
  const std::string lower = lowercase(text);
  const std::size_t token = lower.find("numericid");
  if (token == std::string::npos) throw Error(ErrorCode::kMalformedResponse, "response names no numericId");
  std::size_t pos = token + 9;
  while (pos < text.size() && !std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
  if (pos == text.size()) throw Error(ErrorCode::kMalformedResponse, "no integer follows numericId");
  std::size_t end = pos;
  while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
  MatchDecision decision;
  try {
    decision.selectedNumericId = std::stoll(std::string(text.substr(pos, end - pos)));
  } catch (const std::out_of_range&) {
    throw Error(ErrorCode::kMalformedResponse, "numericId out of range");
  }
  decision.rawText = std::string(text);

  std::size_t attr = lower.find("attributes", end);
  if (attr == std::string::npos) attr = lower.find("attributes");
  if (attr != std::string::npos) {
    std::size_t start = attr + 10;
    while (start < text.size() && (text[start] == ':' || text[start] == ' ' || text[start] == '\t')) ++start;
    const std::string_view clause = text.substr(start, sentence_end(text, start) - start);
    std::vector<std::string> seen;
    for (const auto& raw : split_attribute_clause(clause)) {
      const std::string token_text = clean_attribute_token(raw);
      if (token_text.empty()) continue;
      if (auto canonical = canonical_attribute_name(token_text)) {
        if (std::find(seen.begin(), seen.end(), lowercase(*canonical)) != seen.end()) continue;
        seen.push_back(lowercase(*canonical));
        decision.mentionedAttributes.push_back(*canonical);
      } else {
        const std::string lowered = lowercase(token_text);
        if (std::find(decision.unrecognizedAttributes.begin(), decision.unrecognizedAttributes.end(), lowered) ==
            decision.unrecognizedAttributes.end()) {
          decision.unrecognizedAttributes.push_back(lowered);
        }
      }
    }
  }
  return decision;
}

std::vector<std::string> parse_repair_response(std::string_view text) {
  const std::size_t open = text.find("```");
  if (open != std::string_view::npos) {
    std::size_t body = text.find('\n', open);
    body = body == std::string_view::npos ? text.size() : body + 1;
    std::size_t close = text.find("```", body);
    if (close == std::string_view::npos) close = text.size();
    auto statements = split_statements(strip_line_comments(text.substr(body, close - body)));
    if (!statements.empty()) return statements;
  }
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (!mentions_statement_keyword(line)) continue;
    // Prefer inline code spans when the line is prose around code.
    const std::size_t tick = line.find('`');
    if (tick != std::string_view::npos) {
      const std::size_t close = line.find('`', tick + 1);
      if (close != std::string_view::npos && mentions_statement_keyword(line.substr(tick + 1, close - tick - 1))) {
        line = trim(line.substr(tick + 1, close - tick - 1));
      }
    }
    lines.emplace_back(line);
  }
  if (lines.empty()) throw Error(ErrorCode::kNoRepairFound, "response contains no statement");
  return lines;
}

AggregatedDecision aggregate_runs(std::span<const MatchDecision> decisions, std::span<const std::int64_t> candidate_order) {
  if (decisions.empty()) throw Error(ErrorCode::kInvalidArgument, "no decisions to aggregate");
  std::map<std::int64_t, std::int64_t> counts;
  for (const auto& d : decisions) ++counts[d.selectedNumericId];
  std::int64_t best_count = 0;
  for (const auto& [id, count] : counts) best_count = std::max(best_count, count);
  const auto order_of = [&](std::int64_t id) {
    auto it = std::find(candidate_order.begin(), candidate_order.end(), id);
    return it == candidate_order.end() ? candidate_order.size()
                                       : static_cast<std::size_t>(it - candidate_order.begin());
  };
  std::optional<std::int64_t> winner;
  for (const auto& [id, count] : counts) {
    if (count != best_count) continue;
    // counts iterates ids ascending, so equal positions keep the smaller id.
    if (!winner || order_of(id) < order_of(*winner)) winner = id;
  }
  for (const auto& d : decisions) {
    if (d.selectedNumericId == *winner) {
      return {d, Fraction(best_count, static_cast<std::int64_t>(decisions.size()))};
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unreachable");
}

std::uint64_t prompt_fingerprint(std::span<const ChatMessage> prompt) {
  std::uint64_t h = 14695981039346656037ULL;
  const auto feed = [&h](std::string_view bytes) {
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& m : prompt) {
    feed(to_string(m.role));
    feed(std::string_view("\0", 1));
    feed(m.content);
    feed(std::string_view("\0", 1));
  }
  return h;
}

std::string fingerprint_hex(std::uint64_t fingerprint) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fingerprint));
  return buf;
}

std::string chat_send(ChatBackend& backend, std::span<const ChatMessage> prompt, const RunConfig& config) {
  for (std::size_t attempt = 0;; ++attempt) {
    try {
      return backend.complete(prompt, config);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTransportError || attempt >= config.maxRetries) throw;
    }
    const double delay = config.retryBaseDelaySeconds * std::pow(2.0, static_cast<double>(attempt));
    if (delay > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(delay));
  }
}

MockBackend MockBackend::from_json(std::string_view script) {
  using nlohmann::json;
  const auto bad = [](const std::string& what) { return Error(ErrorCode::kMalformedMockScript, what); };
  json doc;
  try {
    doc = json::parse(script);
  } catch (const json::parse_error& e) {
    throw bad(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw bad("script must be a JSON object");
  MockBackend mock;
  const auto read_response = [&](const json& r) {
    Response out;
    if (r.is_string()) {
      out.text = r.get<std::string>();
    } else if (r.is_object() && r.contains("error") && r["error"].is_string()) {
      out.error = r["error"].get<std::string>();
      if (*out.error != "transport" && *out.error != "auth" && *out.error != "token_limit") {
        throw bad("unknown error kind '" + *out.error + "'");
      }
    } else if (r.is_object() && r.contains("text") && r["text"].is_string()) {
      out.text = r["text"].get<std::string>();
    } else {
      throw bad("response must be a string, {\"text\": ...} or {\"error\": ...}");
    }
    return out;
  };
  if (doc.contains("rules")) {
    if (!doc["rules"].is_array()) throw bad("\"rules\" must be an array");
    for (const auto& r : doc["rules"]) {
      if (!r.is_object()) throw bad("rule must be an object");
      Rule rule;
      if (r.contains("fingerprint")) {
        const auto& f = r["fingerprint"];
        if (!f.is_string()) throw bad("fingerprint must be a hex string");
        try {
          std::size_t used = 0;
          rule.fingerprint = std::stoull(f.get<std::string>(), &used, 16);
          if (used != f.get<std::string>().size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw bad("fingerprint '" + f.get<std::string>() + "' is not hexadecimal");
        }
      }
      if (r.contains("contains")) {
        const auto& c = r["contains"];
        if (c.is_string()) {
          rule.contains.push_back(c.get<std::string>());
        } else if (c.is_array()) {
          for (const auto& s : c) {
            if (!s.is_string()) throw bad("\"contains\" entries must be strings");
            rule.contains.push_back(s.get<std::string>());
          }
        } else {
          throw bad("\"contains\" must be a string or an array");
        }
      }
      if (!r.contains("responses") || !r["responses"].is_array() || r["responses"].empty()) {
        throw bad("rule needs a non-empty \"responses\" array");
      }
      for (const auto& resp : r["responses"]) rule.responses.push_back(read_response(resp));
      mock.rules_.push_back(std::move(rule));
    }
  }
  if (doc.contains("default")) {
    if (!doc["default"].is_string()) throw bad("\"default\" must be a string");
    mock.default_ = doc["default"].get<std::string>();
  }
  return mock;
}

MockBackend MockBackend::from_file(const std::filesystem::path& path) { return from_json(read_text_file(path)); }

MockBackend::MockBackend(const MockBackend& other) {
  std::lock_guard lock(other.mutex_);
  rules_ = other.rules_;
  default_ = other.default_;
  cursors_ = other.cursors_;
  calls_ = std::make_shared<std::atomic<std::size_t>>(other.calls_->load());
}

std::shared_ptr<ChatBackend> MockBackend::session() {
  auto fresh = std::shared_ptr<MockBackend>(new MockBackend());
  std::lock_guard lock(mutex_);
  fresh->rules_ = rules_;
  fresh->default_ = default_;
  fresh->calls_ = calls_;
  return fresh;
}

std::string MockBackend::complete(std::span<const ChatMessage> prompt, const RunConfig&) {
  const std::uint64_t fp = prompt_fingerprint(prompt);
  std::lock_guard lock(mutex_);
  ++*calls_;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const Rule& rule = rules_[i];
    if (rule.fingerprint && *rule.fingerprint != fp) continue;
    const bool all_present = std::all_of(rule.contains.begin(), rule.contains.end(), [&](const std::string& needle) {
      return std::any_of(prompt.begin(), prompt.end(),
                         [&](const ChatMessage& m) { return m.content.find(needle) != std::string::npos; });
    });
    if (!all_present) continue;
    std::size_t& cursor = cursors_[{i, fp}];
    const Response& r = rule.responses[std::min(cursor, rule.responses.size() - 1)];
    ++cursor;
    if (r.error) throw_backend_error(*r.error, "scripted " + *r.error + " failure");
    return r.text;
  }
  if (default_) return *default_;
  throw Error(ErrorCode::kMalformedMockScript, "no mock rule matches prompt " + fingerprint_hex(fp));
}

std::size_t MockBackend::call_count() const {
  return calls_->load();
}

}  // namespace uirepair
