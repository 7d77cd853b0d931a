#include "skilladapt/gateway/session.hpp"

#include <chrono>

namespace skilladapt::gateway {

const char* const kDefaultSystemPrompt =
    "You adapt a robot skill on behalf of the operator. You can only act through the provided tools. "
    "Trajectory time is normalized to [0, 1]; positions are in meters in the robot base frame. "
    "Pick the tool that matches the instruction, fill in every required argument, and resolve spatial "
    "references (\"left\", \"at the start\") against the context you are given. If no tool fits, answer "
    "briefly in plain text.";

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system:
      return "system";
    case Role::user:
      return "user";
    case Role::assistant:
      return "assistant";
    case Role::tool:
      return "tool";
  }
  return "user";
}

void to_json(json& j, const ChatTurn& t) {
  j = {{"role", std::string(to_string(t.role))},
       {"text", t.text},
       {"tool_calls", t.tool_calls},
       {"records", t.records},
       {"timestamp", t.timestamp},
       {"error", t.error}};
}

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

}  // namespace

ChatSession::ChatSession(const ToolRegistry& registry, ChatBackend& backend, SessionConfig config)
    : registry_(registry), backend_(backend), config_(std::move(config)) {}

json ChatSession::messages(const json& context) const {
  json msgs = json::array();
  msgs.push_back({{"role", "system"}, {"content", config_.system_prompt}});
  if (!context.is_null()) msgs.push_back({{"role", "system"}, {"content", "Context: " + context.dump()}});
  for (const auto& t : transcript_) {
    if (t.role == Role::user || t.role == Role::assistant) {
      msgs.push_back({{"role", std::string(to_string(t.role))}, {"content", t.text}});
    }
  }
  return msgs;
}

ChatTurn ChatSession::handle_query(const std::string& text, ToolTarget& target, const json& context) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "query text must not be empty");
  }
  std::unique_lock lock(in_flight_, std::try_to_lock);
  if (!lock.owns_lock()) throw Error(ErrorCode::Busy, "a query is already in flight for this session");

  const auto start = std::chrono::steady_clock::now();
  ChatTurn user;
  user.role = Role::user;
  user.text = text;
  user.timestamp = now_seconds();
  transcript_.push_back(user);

  ChatTurn answer;
  answer.role = Role::assistant;
  try {
    const auto reply = backend_.complete(build_request(config_.model, messages(context), registry_));
    answer.text = reply.text;
    answer.tool_calls = reply.calls;
    bool stopped = false;
    for (const auto& call : reply.calls) {
      DispatchRecord rec;
      if (stopped) {
        rec.call = call;
        rec.outcome = Outcome::skipped;
        rec.reason = "skipped after an earlier rejection";
      } else {
        rec = dispatch(registry_, call, target);
        stopped = rec.outcome == Outcome::rejected;
      }
      answer.records.push_back(std::move(rec));
    }
  } catch (const Error& e) {
    answer.error = true;
    answer.text = "Backend error (" + std::string(to_string(e.code())) + "): " + e.what();
  }
  const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (auto& rec : answer.records) {
    rec.latency_s = latency;
    std::string line;
    switch (rec.outcome) {
      case Outcome::applied:
        line = "Applied " + describe(rec.call) + ".";
        break;
      case Outcome::rejected:
        line = "Rejected " + describe(rec.call) + ": " + rec.reason;
        break;
      case Outcome::skipped:
        line = "Skipped " + describe(rec.call) + ".";
        break;
    }
    answer.text += (answer.text.empty() ? "" : "\n") + line;
    records_.push_back(rec);
  }
  answer.timestamp = now_seconds();
  transcript_.push_back(answer);
  if (on_notification) on_notification(answer);
  return answer;
}

}  // namespace skilladapt::gateway
