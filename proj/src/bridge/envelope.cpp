#include "skilladapt/bridge/envelope.hpp"

namespace skilladapt::bridge {

std::string_view to_string(MessageType t) {
  switch (t) {
    case MessageType::service_request:
      return "service_request";
    case MessageType::service_response:
      return "service_response";
    case MessageType::topic_publish:
      return "topic_publish";
    case MessageType::subscribe:
      return "subscribe";
    case MessageType::unsubscribe:
      return "unsubscribe";
    case MessageType::error:
      return "error";
  }
  return "error";
}

MessageType message_type_from_string(std::string_view s) {
  for (auto t : {MessageType::service_request, MessageType::service_response, MessageType::topic_publish,
                 MessageType::subscribe, MessageType::unsubscribe, MessageType::error}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorCode::BadPayload, "unknown message type '" + std::string(s) + "'");
}

json to_json(const Envelope& e) {
  return {{"v", kProtocolVersion},
          {"type", std::string(to_string(e.type))},
          {"id", e.id ? json(*e.id) : json(nullptr)},
          {"name", e.name},
          {"payload", e.payload}};
}

std::string serialize(const Envelope& e) { return to_json(e).dump(); }

Envelope from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::BadPayload, "envelope must be a JSON object");
  if (j.value("v", 0) != kProtocolVersion) {
    throw Error(ErrorCode::BadPayload, "unsupported protocol version (expected \"v\": 1)");
  }
  if (!j.contains("type") || !j["type"].is_string()) throw Error(ErrorCode::BadPayload, "envelope needs a string 'type'");
  Envelope e;
  e.type = message_type_from_string(j["type"].get<std::string>());
  if (j.contains("id") && !j["id"].is_null()) {
    if (!j["id"].is_number_integer()) throw Error(ErrorCode::BadPayload, "'id' must be an integer");
    e.id = j["id"].get<std::int64_t>();
  }
  if (!j.contains("name") || !j["name"].is_string()) throw Error(ErrorCode::BadPayload, "envelope needs a string 'name'");
  e.name = j["name"].get<std::string>();
  e.payload = j.value("payload", json(nullptr));
  return e;
}

Envelope parse(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw Error(ErrorCode::ParseError, std::string("malformed JSON: ") + ex.what());
  }
  return from_json(j);
}

Envelope make_error(std::optional<std::int64_t> id, std::string name, ErrorCode code, const std::string& message) {
  return {MessageType::error, id, std::move(name), {{"code", std::string(to_string(code))}, {"message", message}}};
}

}  // namespace skilladapt::bridge
