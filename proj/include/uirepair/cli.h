#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "uirepair/error.h"
#include "uirepair/llm_bridge.h"
#include "uirepair/matchers.h"

namespace uirepair::cli {

enum class BackendKind { kMock, kLive };

struct ToolConfig {
  std::string modelId = "gpt-3.5-turbo";
  double temperature = 0.8;
  std::size_t runsPerBreakage = 4;
  std::size_t candidateK = kDefaultCandidateCount;
  MatcherAlgorithm matcher = MatcherAlgorithm::kEditDistance;
  BackendKind backend = BackendKind::kMock;
  std::size_t parallelism = 1;
  std::string mockScript;
  bool selfCorrect = true;
  std::size_t maxRetries = 3;
  double requestTimeoutSeconds = 60.0;

  // Keys: model, temperature, runs, k, matcher, backend, parallelism,
  // mock_script, self_correct, max_retries, timeout.
  // Throws Error{kUsage} for an unknown key or a bad value.
  void set(std::string_view key, std::string_view value);
  // Throws Error{kUsage}.
  void validate() const;
};

// "key = value" lines; '#' starts a comment line. Throws Error{kUsage}.
std::map<std::string, std::string> parse_config_text(std::string_view text);

// UIREPAIR_MODEL, UIREPAIR_TEMPERATURE, UIREPAIR_RUNS, UIREPAIR_K,
// UIREPAIR_MATCHER, UIREPAIR_BACKEND, UIREPAIR_PARALLELISM.
inline constexpr std::pair<std::string_view, std::string_view> kEnvironmentKeys[] = {
    {"UIREPAIR_MODEL", "model"},     {"UIREPAIR_TEMPERATURE", "temperature"}, {"UIREPAIR_RUNS", "runs"},
    {"UIREPAIR_K", "k"},             {"UIREPAIR_MATCHER", "matcher"},         {"UIREPAIR_BACKEND", "backend"},
    {"UIREPAIR_PARALLELISM", "parallelism"}};

struct Environment {
  std::function<std::optional<std::string>(const std::string&)> getenv;
  // Used by the live backend; defaults to an HTTPS client.
  std::shared_ptr<HttpTransport> transport;

  static Environment process();
};

int exit_code_for(ErrorCategory category);

// Runs one command line. Returns the process exit status: 0 on success,
// 2 usage, 3 I/O, 4 backend, 5 data.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const Environment& env = Environment::process());

}  // namespace uirepair::cli
