#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "skilladapt/gateway/tools.hpp"

namespace skilladapt::gateway {

struct BackendReply {
  std::string text;
  std::vector<ToolCall> calls;  // origin llm
};

// Chat-completions style backend: takes the request body (model, messages,
// tools) and returns the parsed reply.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual BackendReply complete(const json& request) = 0;
};

json build_request(const std::string& model, const json& messages, const ToolRegistry& registry);

// Accepts {"choices": [{"message": {"content", "tool_calls": [...]}}]} with
// function arguments either as a JSON string or an object. Throws
// MalformedBackendResponse otherwise.
BackendReply parse_response(const json& response);

// Deterministic rule table over the last user message. Pure function of the
// request; unknown utterances produce a text-only reply.
class MockBackend : public ChatBackend {
 public:
  json respond(const json& request) const;
  BackendReply complete(const json& request) override { return parse_response(respond(request)); }
};

struct HttpBackendConfig {
  std::string url = "http://127.0.0.1:8000/v1/chat/completions";
  std::string api_key;
  std::chrono::milliseconds timeout{60000};
};

// Environment variable holding the backend URL.
inline constexpr const char* kBackendUrlEnv = "SKILLADAPT_LLM_URL";

// Plain HTTP POST; connection or HTTP failures raise BackendUnreachable.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config);
  BackendReply complete(const json& request) override;

 private:
  HttpBackendConfig config_;
  std::string origin_;
  std::string path_;
};

}  // namespace skilladapt::gateway
