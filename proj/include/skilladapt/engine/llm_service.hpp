#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "skilladapt/gateway/session.hpp"

namespace skilladapt::engine {

using nlohmann::json;

// The three language services around one chat session. Queries are
// numbered; answers are kept until the service is destroyed.
class LlmService {
 public:
  LlmService(std::unique_ptr<gateway::ChatBackend> backend, gateway::SessionConfig config = {});

  const gateway::ToolRegistry& registry() const { return registry_; }
  const gateway::ChatSession& session() const { return session_; }

  // Reserves a query id. Busy while another query is in flight;
  // InvalidArgument for empty text.
  int begin(const std::string& text);
  // Runs a reserved query and returns the llm_notification payload.
  json run(int id, const std::string& text, gateway::ToolTarget& target, const json& context);
  // Latest answer when `id` is empty. UnknownId if not (yet) answered.
  json answer(std::optional<int> id) const;

 private:
  gateway::ToolRegistry registry_;
  std::unique_ptr<gateway::ChatBackend> backend_;
  gateway::ChatSession session_;
  mutable std::mutex mutex_;
  std::map<int, json> answers_;
  int next_id_ = 1;
  bool in_flight_ = false;
};

}  // namespace skilladapt::engine
