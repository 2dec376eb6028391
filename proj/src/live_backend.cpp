#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <semaphore>

#include <json.hpp>

#include "uirepair/error.h"
#include "uirepair/llm_bridge.h"

namespace uirepair {
namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "endpoint '" + url + "' has no scheme");
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool mentions_context_length(const std::string& body) {
  return body.find("context_length_exceeded") != std::string::npos ||
         body.find("maximum context length") != std::string::npos;
}

}  // namespace

HttpResponse HttplibTransport::post(const std::string& url, const std::string& body,
                                    const std::vector<HttpHeader>& headers, double timeout_seconds) {
  const ParsedUrl parsed = split_url(url);
  httplib::Client client(parsed.origin);
  const auto seconds = static_cast<time_t>(timeout_seconds);
  const auto micros = static_cast<time_t>((timeout_seconds - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  httplib::Headers h;
  for (const auto& header : headers) h.emplace(header.name, header.value);
  auto result = client.Post(parsed.path, h, body, "application/json");
  if (!result) {
    throw Error(ErrorCode::kTransportError, "request to " + parsed.origin + " failed: " + httplib::to_string(result.error()));
  }
  return {result->status, result->body};
}

HttpResponse RecordingTransport::post(const std::string& url, const std::string& body,
                                      const std::vector<HttpHeader>& headers, double timeout_seconds) {
  {
    std::lock_guard lock(mutex_);
    urls_.push_back(url);
  }
  if (!inner_) throw Error(ErrorCode::kTransportError, "recording transport has no network access");
  return inner_->post(url, body, headers, timeout_seconds);
}

std::size_t RecordingTransport::connection_count() const {
  std::lock_guard lock(mutex_);
  return urls_.size();
}

std::vector<std::string> RecordingTransport::urls() const {
  std::lock_guard lock(mutex_);
  return urls_;
}

LiveBackendOptions LiveBackendOptions::from_environment() {
  LiveBackendOptions options;
  if (const char* key = std::getenv("OPENAI_API_KEY")) options.apiKey = key;
  if (const char* endpoint = std::getenv("UIREPAIR_ENDPOINT"); endpoint != nullptr && *endpoint != '\0') {
    options.endpoint = endpoint;
  }
  return options;
}

struct LiveBackend::Throttle {
  explicit Throttle(std::size_t n) : slots(static_cast<std::ptrdiff_t>(n)) {}
  std::counting_semaphore<1024> slots;
};

LiveBackend::LiveBackend(LiveBackendOptions options, std::shared_ptr<HttpTransport> transport)
    : options_(std::move(options)), transport_(std::move(transport)) {
  if (options_.maxInFlight == 0 || options_.maxInFlight > 1024) {
    throw Error(ErrorCode::kInvalidArgument, "in-flight limit must lie in [1, 1024]");
  }
  if (!transport_) throw Error(ErrorCode::kInvalidArgument, "live backend needs a transport");
  throttle_ = std::make_unique<Throttle>(options_.maxInFlight);
}

LiveBackend::~LiveBackend() = default;

std::string LiveBackend::request_body(std::span<const ChatMessage> prompt, const RunConfig& config) {
  nlohmann::ordered_json body;
  body["model"] = config.modelId;
  body["temperature"] = config.temperature;
  body["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : prompt) {
    body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  return body.dump();
}

std::string LiveBackend::interpret_response(const HttpResponse& response) {
  const std::string status = "HTTP " + std::to_string(response.status);
  if (response.status == 401 || response.status == 403) {
    throw Error(ErrorCode::kAuthError, status + ": credential rejected");
  }
  if (mentions_context_length(response.body)) throw Error(ErrorCode::kTokenLimitError, status + ": prompt too long");
  if (response.status != 200) throw Error(ErrorCode::kTransportError, status);
  try {
    const auto doc = nlohmann::json::parse(response.body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse, std::string("unexpected completion body: ") + e.what());
  }
}

std::string LiveBackend::complete(std::span<const ChatMessage> prompt, const RunConfig& config) {
  if (options_.apiKey.empty()) throw Error(ErrorCode::kAuthError, "OPENAI_API_KEY is not set");
  const std::string body = request_body(prompt, config);
  const std::vector<HttpHeader> headers = {{"Authorization", "Bearer " + options_.apiKey}};
  throttle_->slots.acquire();
  HttpResponse response;
  try {
    response = transport_->post(options_.endpoint, body, headers, config.requestTimeoutSeconds);
  } catch (...) {
    throttle_->slots.release();
    throw;
  }
  throttle_->slots.release();
  return interpret_response(response);
}

}  // namespace uirepair
