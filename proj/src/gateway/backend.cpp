#include "skilladapt/gateway/backend.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <regex>

namespace skilladapt::gateway {

json build_request(const std::string& model, const json& messages, const ToolRegistry& registry) {
  return {{"model", model}, {"messages", messages}, {"tools", registry.function_schemas()}, {"tool_choice", "auto"}};
}

namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorCode::MalformedBackendResponse, "malformed backend response: " + why);
}

}  // namespace

BackendReply parse_response(const json& response) {
  if (!response.is_object() || !response.contains("choices") || !response["choices"].is_array() ||
      response["choices"].empty()) {
    malformed("missing choices");
  }
  const auto& choice = response["choices"][0];
  if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object()) {
    malformed("missing message");
  }
  const auto& msg = choice["message"];
  BackendReply reply;
  if (msg.contains("content") && msg["content"].is_string()) reply.text = msg["content"].get<std::string>();
  if (msg.contains("tool_calls") && !msg["tool_calls"].is_null()) {
    if (!msg["tool_calls"].is_array()) malformed("tool_calls is not an array");
    for (const auto& tc : msg["tool_calls"]) {
      if (!tc.is_object() || !tc.contains("function") || !tc["function"].is_object()) malformed("tool call without function");
      const auto& fn = tc["function"];
      if (!fn.contains("name") || !fn["name"].is_string()) malformed("function without name");
      ToolCall call;
      call.tool = fn["name"].get<std::string>();
      call.origin = CallOrigin::llm;
      const json args = fn.value("arguments", json::object());
      if (args.is_string()) {
        try {
          call.args = json::parse(args.get<std::string>());
        } catch (const json::parse_error&) {
          malformed("function arguments are not JSON");
        }
      } else {
        call.args = args;
      }
      if (!call.args.is_object()) malformed("function arguments are not an object");
      reply.calls.push_back(std::move(call));
    }
  }
  return reply;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<double> numbers(const std::string& s) {
  static const std::regex re(R"([-+]?(?:\d+\.?\d*|\.\d+))");
  std::vector<double> out;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back(std::stod(it->str()));
  }
  return out;
}

std::optional<double> after(const std::string& s, const std::string& pattern) {
  std::smatch m;
  if (std::regex_search(s, m, std::regex(pattern))) return std::stod(m[1].str());
  return std::nullopt;
}

bool has(const std::string& s, std::string_view word) { return s.find(word) != std::string::npos; }

json call(const std::string& name, const json& args, int index) {
  return {{"id", "call_" + std::to_string(index)},
          {"type", "function"},
          {"function", {{"name", name}, {"arguments", args.dump()}}}};
}

json reply(const std::string& text, json tool_calls) {
  json msg = {{"role", "assistant"}, {"content", text.empty() ? json(nullptr) : json(text)}};
  if (!tool_calls.empty()) msg["tool_calls"] = std::move(tool_calls);
  return {{"id", "mock"},
          {"object", "chat.completion"},
          {"model", "mock"},
          {"choices", json::array({{{"index", 0}, {"message", msg},
                                    {"finish_reason", msg.contains("tool_calls") ? "tool_calls" : "stop"}}})}};
}

const std::string kNum = R"(([-+]?(?:\d+\.?\d*|\.\d+)))";

// Retiming: "between 20% and 60%" sets the window (default whole motion);
// "by half" = 50, "by N%" = N.
json retime(const std::string& text, const std::string& tool) {
  double t0 = 0.0;
  double t1 = 1.0;
  std::smatch m;
  if (std::regex_search(text, m, std::regex("between " + kNum + " ?%? and " + kNum + " ?%"))) {
    t0 = std::stod(m[1].str()) / 100.0;
    t1 = std::stod(m[2].str()) / 100.0;
  }
  double pct = 50.0;
  if (has(text, "by half")) {
    pct = 50.0;
  } else if (auto p = after(text, "by " + kNum + " ?%")) {
    pct = *p;
  }
  return call(tool, {{"percentage", pct}, {"t_start", t0}, {"t_end", t1}}, 0);
}

}  // namespace

json MockBackend::respond(const json& request) const {
  std::string text;
  if (request.contains("messages") && request["messages"].is_array()) {
    for (auto it = request["messages"].rbegin(); it != request["messages"].rend(); ++it) {
      if (it->value("role", "") == "user" && (*it)["content"].is_string()) {
        text = lower((*it)["content"].get<std::string>());
        break;
      }
    }
  }
  json calls = json::array();
  if (has(text, "slow")) {
    calls.push_back(retime(text, "SlowDown"));
  } else if (has(text, "speed up") || has(text, "faster")) {
    calls.push_back(retime(text, "SpeedUp"));
  } else if (has(text, "avoid") || has(text, "obstacle")) {
    const auto r = after(text, "radius " + kNum);
    auto nums = numbers(text.substr(0, text.find("radius")));
    if (r && nums.size() >= 3) {
      nums.erase(nums.begin(), nums.end() - 3);
      calls.push_back(call("AddRepulsion", {{"pos", nums}, {"radius", *r}}, 0));
    }
  } else if (has(text, "via")) {
    std::smatch m;
    const std::regex time_re("(?:at )?(?:time|t ?=) ?" + kNum);
    if (std::regex_search(text, m, time_re)) {
      const double t = std::stod(m[1].str());
      const std::string rest = std::string(m.prefix()) + " " + std::string(m.suffix());
      auto nums = numbers(rest.substr(rest.find("via")));
      if (nums.size() >= 3) {
        nums.resize(3);
        calls.push_back(call("AddViaPoints", {{"time", t}, {"pos", nums}}, 0));
      }
    }
  } else if (has(text, "pause") || has(text, "stop coverage")) {
    calls.push_back(call("SetExecState", {{"state", "pause"}}, 0));
  } else if (has(text, "resume") || has(text, "continue")) {
    calls.push_back(call("SetExecState", {{"state", "resume"}}, 0));
  } else if (has(text, "force")) {
    if (auto v = after(text, "force (?:to )?" + kNum)) calls.push_back(call("SetForce", {{"force", *v}}, 0));
  } else if (has(text, "stiffness")) {
    if (auto v = after(text, "stiffness (?:to )?" + kNum)) calls.push_back(call("SetStiffness", {{"stiffness", *v}}, 0));
  } else if (has(text, "velocity")) {
    if (auto v = after(text, "velocity (?:to )?" + kNum)) calls.push_back(call("SetVelocity", {{"velocity", *v}}, 0));
  }
  if (calls.empty()) {
    return reply("I can retime the motion, add via-points, avoid obstacles, or adjust the coverage "
                 "velocity, force, stiffness and pause state.",
                 json::array());
  }
  return reply("", calls);
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.url, m, re)) {
    throw Error(ErrorCode::InvalidArgument, "backend URL must look like http://host:port/path");
  }
  origin_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
}

BackendReply HttpChatBackend::complete(const json& request) {
  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  auto res = client.Post(path_, headers, request.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::BackendUnreachable,
                "backend " + config_.url + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::BackendUnreachable,
                "backend " + config_.url + " returned HTTP " + std::to_string(res->status));
  }
  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::parse_error&) {
    throw Error(ErrorCode::MalformedBackendResponse, "backend response is not JSON");
  }
  return parse_response(body);
}

}  // namespace skilladapt::gateway
