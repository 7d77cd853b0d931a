#include "skilladapt/engine/llm_service.hpp"

#include "skilladapt/engine/services.hpp"

#include <algorithm>

namespace skilladapt::engine {

bool is_service(std::string_view name) {
  return std::find(kMotionServices.begin(), kMotionServices.end(), name) != kMotionServices.end() ||
         std::find(kLlmServices.begin(), kLlmServices.end(), name) != kLlmServices.end();
}

bool is_extension(std::string_view name) {
  return std::find(kExtensionServices.begin(), kExtensionServices.end(), name) != kExtensionServices.end();
}

bool is_topic(std::string_view name) { return std::find(kTopics.begin(), kTopics.end(), name) != kTopics.end(); }

LlmService::LlmService(std::unique_ptr<gateway::ChatBackend> backend, gateway::SessionConfig config)
    : registry_(gateway::register_builtin_tools()),
      backend_(std::move(backend)),
      session_(registry_, *backend_, std::move(config)) {}

int LlmService::begin(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "query text must not be empty");
  }
  std::lock_guard lock(mutex_);
  if (in_flight_) throw Error(ErrorCode::Busy, "a language query is already in flight");
  in_flight_ = true;
  return next_id_++;
}

json LlmService::run(int id, const std::string& text, gateway::ToolTarget& target, const json& context) {
  json answer;
  try {
    const auto turn = session_.handle_query(text, target, context);
    answer = {{"query_id", id}, {"text", turn.text}, {"records", turn.records}, {"error", turn.error}};
  } catch (const Error& e) {
    answer = {{"query_id", id},
              {"text", std::string("Query failed (") + std::string(to_string(e.code())) + "): " + e.what()},
              {"records", json::array()},
              {"error", true}};
  }
  std::lock_guard lock(mutex_);
  answers_[id] = answer;
  in_flight_ = false;
  return {{"query_id", id}, {"status", answer["error"].get<bool>() ? "error" : "answered"}};
}

json LlmService::answer(std::optional<int> id) const {
  std::lock_guard lock(mutex_);
  if (answers_.empty()) throw Error(ErrorCode::UnknownId, "no answer available yet");
  if (!id) return answers_.rbegin()->second;
  auto it = answers_.find(*id);
  if (it == answers_.end()) throw Error(ErrorCode::UnknownId, "no answer for query " + std::to_string(*id));
  return it->second;
}

}  // namespace skilladapt::engine
