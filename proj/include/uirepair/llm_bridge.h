#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uirepair/dom_snapshot.h"
#include "uirepair/fraction.h"
#include "uirepair/matchers.h"

namespace uirepair {

enum class ChatRole { kSystem, kUser, kAssistant };

std::string_view to_string(ChatRole role);
ChatRole parse_chat_role(std::string_view name);

struct ChatMessage {
  ChatRole role = ChatRole::kUser;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

using ChatPrompt = std::vector<ChatMessage>;

struct RunConfig {
  std::string modelId = "gpt-3.5-turbo";
  double temperature = 0.8;
  std::size_t runsPerBreakage = 4;
  double requestTimeoutSeconds = 60.0;
  std::size_t maxRetries = 3;
  // Backoff before retry i (0-based) is retryBaseDelaySeconds * 2^i.
  double retryBaseDelaySeconds = 1.0;

  // Throws Error{kInvalidArgument}.
  void validate() const;
};

struct MatchDecision {
  std::int64_t selectedNumericId = 0;
  // Canonical attribute names (record field spelling, or "location"/"size").
  std::vector<std::string> mentionedAttributes;
  // Names that did not map onto the attribute vocabulary, lowercased.
  std::vector<std::string> unrecognizedAttributes;
  std::string rawText;

  friend bool operator==(const MatchDecision&, const MatchDecision&) = default;
};

namespace prompt_text {
inline constexpr std::string_view kP1 = "You are a web UI test script repair tool.";
inline constexpr std::string_view kP2 =
    "To repair the broken statement, you need to choose the element most similar to the target element from the "
    "given candidate element list firstly.\n"
    "Give me your selected element's numericId and a brief explanation containing the attributes that are most "
    "similar to the target element.";
inline constexpr std::string_view kP3 =
    "Your answer should follow the format of this example:\n"
    "\"The most similar element's numericId: 1. Because they share the most similar attributes: id, xpath, text.\"";
inline constexpr std::string_view kP4Prefix = "To repair the broken statement, you chose the element <";
inline constexpr std::string_view kP4Suffix =
    "> as the most similar to the target element from the given candidate element list.";
inline constexpr std::string_view kP5 =
    "Now based on your selected element, update the locator and outdated assertion of the broken statement. "
    "Give the result of repaired statement.";
inline constexpr std::string_view kP6Prompt = "This is a previous prompt: <";
inline constexpr std::string_view kP6Answer = "This is your previous answer: <";
inline constexpr std::string_view kP7Prefix = "But your explanation for attributes <";
inline constexpr std::string_view kP7Suffix =
    "> are inconsistent with your selection and this will influence the correctness of your answer. "
    "Please answer again.";
inline constexpr std::string_view kP8Target = "Target element: <";
inline constexpr std::string_view kP8Candidates = "Candidate elements: <";
inline constexpr std::string_view kP9 = "Broken statement: <";
}  // namespace prompt_text

// system p1; user p2 + p3 + p8 joined by newlines.
ChatPrompt build_matching_prompt(const WebElementRecord& target, const CandidateRanking& candidates);
// system p1; user p4 + p5 + p9 joined by newlines.
ChatPrompt build_repair_prompt(const WebElementRecord& selected, std::string_view broken);
// A single user message: p6 then p7. The previous prompt is embedded as its
// message contents joined by newlines.
ChatPrompt build_self_correction_prompt(std::span<const ChatMessage> previous_prompt, std::string_view previous_answer,
                                        std::span<const std::string> inconsistent_attributes);

// The prompt as plain text, one "[role]" header line before each message.
std::string render_prompt(std::span<const ChatMessage> prompt);

// An answer in the exact shape of the p3 example.
std::string render_match_answer(std::int64_t numeric_id, std::span<const std::string> attributes);

// Maps a free-text attribute name onto the vocabulary: the twelve record
// attributes plus "location" (x, y, position, coordinates) and "size".
std::optional<std::string> canonical_attribute_name(std::string_view name);

// Throws Error{kMalformedResponse} when no numericId integer is present.
MatchDecision parse_match_response(std::string_view text);

// Throws Error{kNoRepairFound}.
std::vector<std::string> parse_repair_response(std::string_view text);

struct AggregatedDecision {
  MatchDecision decision;
  Fraction agreement;
};

// Modal selection across runs. Ties go to the id listed earliest in
// candidate_order; ids missing from it rank after all listed ids, smallest
// first. Throws Error{kInvalidArgument} on an empty list.
AggregatedDecision aggregate_runs(std::span<const MatchDecision> decisions,
                                  std::span<const std::int64_t> candidate_order = {});

// FNV-1a 64 over role and content of every message.
std::uint64_t prompt_fingerprint(std::span<const ChatMessage> prompt);
std::string fingerprint_hex(std::uint64_t fingerprint);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // One attempt. Throws Error{kTransportError|kAuthError|kTokenLimitError}.
  virtual std::string complete(std::span<const ChatMessage> prompt, const RunConfig& config) = 0;

  // The backend one breakage talks to. Backends without per-conversation
  // state hand out themselves.
  virtual std::shared_ptr<ChatBackend> session() { return {std::shared_ptr<ChatBackend>(), this}; }
};

// Retries transport failures up to config.maxRetries times with exponential
// backoff. Auth and token-limit errors propagate immediately.
std::string chat_send(ChatBackend& backend, std::span<const ChatMessage> prompt, const RunConfig& config);

// Offline backend driven by a JSON script:
//   {"rules": [{"fingerprint": "<hex>", "contains": ["..."],
//               "responses": ["text", {"error": "transport"}]}],
//    "default": "text"}
// The first rule whose fingerprint (if given) equals the prompt's and whose
// every "contains" string occurs in some message wins. Each distinct prompt
// walks its own cursor through the rule's responses; the last one repeats.
class MockBackend : public ChatBackend {
 public:
  // Throws Error{kMalformedMockScript}.
  static MockBackend from_json(std::string_view script);
  static MockBackend from_file(const std::filesystem::path& path);

  MockBackend(const MockBackend& other);
  MockBackend& operator=(const MockBackend&) = delete;

  std::string complete(std::span<const ChatMessage> prompt, const RunConfig& config) override;
  // Fresh cursors; the call counter is shared with this backend.
  std::shared_ptr<ChatBackend> session() override;
  std::size_t call_count() const;

 private:
  struct Response {
    std::string text;
    std::optional<std::string> error;
  };
  struct Rule {
    std::optional<std::uint64_t> fingerprint;
    std::vector<std::string> contains;
    std::vector<Response> responses;
  };
  MockBackend() = default;

  std::vector<Rule> rules_;
  std::optional<std::string> default_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::size_t, std::uint64_t>, std::size_t> cursors_;
  std::shared_ptr<std::atomic<std::size_t>> calls_ = std::make_shared<std::atomic<std::size_t>>(0);
};

struct HttpHeader {
  std::string name;
  std::string value;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  // Throws Error{kTransportError} when no response arrives.
  virtual HttpResponse post(const std::string& url, const std::string& body, const std::vector<HttpHeader>& headers,
                            double timeout_seconds) = 0;
};

// HTTPS client backed by cpp-httplib.
class HttplibTransport : public HttpTransport {
 public:
  HttpResponse post(const std::string& url, const std::string& body, const std::vector<HttpHeader>& headers,
                    double timeout_seconds) override;
};

// Wraps another transport (or none) and counts every attempted post.
class RecordingTransport : public HttpTransport {
 public:
  explicit RecordingTransport(std::shared_ptr<HttpTransport> inner = nullptr) : inner_(std::move(inner)) {}
  HttpResponse post(const std::string& url, const std::string& body, const std::vector<HttpHeader>& headers,
                    double timeout_seconds) override;
  std::size_t connection_count() const;
  std::vector<std::string> urls() const;

 private:
  std::shared_ptr<HttpTransport> inner_;
  mutable std::mutex mutex_;
  std::vector<std::string> urls_;
};

inline constexpr std::string_view kDefaultEndpoint = "https://api.openai.com/v1/chat/completions";

struct LiveBackendOptions {
  std::string endpoint = std::string(kDefaultEndpoint);
  std::string apiKey;
  std::size_t maxInFlight = 4;

  // OPENAI_API_KEY and UIREPAIR_ENDPOINT.
  static LiveBackendOptions from_environment();
};

class LiveBackend : public ChatBackend {
 public:
  LiveBackend(LiveBackendOptions options, std::shared_ptr<HttpTransport> transport);
  ~LiveBackend() override;

  std::string complete(std::span<const ChatMessage> prompt, const RunConfig& config) override;

  static std::string request_body(std::span<const ChatMessage> prompt, const RunConfig& config);
  // Maps an endpoint reply to content or the matching error.
  static std::string interpret_response(const HttpResponse& response);

 private:
  struct Throttle;
  LiveBackendOptions options_;
  std::shared_ptr<HttpTransport> transport_;
  std::unique_ptr<Throttle> throttle_;
};

}  // namespace uirepair
