#pragma once

#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "skilladapt/gateway/backend.hpp"

namespace skilladapt::gateway {

enum class Role { system, user, assistant, tool };
std::string_view to_string(Role r);

struct ChatTurn {
  Role role = Role::user;
  std::string text;
  std::vector<ToolCall> tool_calls;
  std::vector<DispatchRecord> records;
  double timestamp = 0.0;  // s since epoch
  bool error = false;      // assistant turn reporting a backend failure
};

void to_json(json& j, const ChatTurn& t);

extern const char* const kDefaultSystemPrompt;

struct SessionConfig {
  std::string model = "local";
  std::string system_prompt = kDefaultSystemPrompt;
};

// One conversation. At most one query in flight (Busy otherwise).
class ChatSession {
 public:
  ChatSession(const ToolRegistry& registry, ChatBackend& backend, SessionConfig config = {});

  // Throws InvalidArgument on empty text (no backend call) and Busy when a
  // query is already running. Backend failures become assistant error turns.
  // `context` (e.g. the current trajectory summary) is sent as a system message.
  ChatTurn handle_query(const std::string& text, ToolTarget& target, const json& context = json());

  const std::vector<ChatTurn>& transcript() const { return transcript_; }
  // Append-only audit trail over every query of this session.
  const std::vector<DispatchRecord>& records() const { return records_; }

  // Fired once per completed query with the assistant turn.
  std::function<void(const ChatTurn&)> on_notification;

 private:
  json messages(const json& context) const;

  const ToolRegistry& registry_;
  ChatBackend& backend_;
  SessionConfig config_;
  std::vector<ChatTurn> transcript_;
  std::vector<DispatchRecord> records_;
  std::mutex in_flight_;
};

}  // namespace skilladapt::gateway
