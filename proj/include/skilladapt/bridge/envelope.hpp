#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "skilladapt/error.hpp"

namespace skilladapt::bridge {

using nlohmann::json;

inline constexpr int kProtocolVersion = 1;

enum class MessageType { service_request, service_response, topic_publish, subscribe, unsubscribe, error };
std::string_view to_string(MessageType t);
MessageType message_type_from_string(std::string_view s);

// One JSON document per frame:
// {"id": <int|null>, "name": <string>, "payload": <any>, "type": <string>, "v": 1}
struct Envelope {
  MessageType type = MessageType::service_request;
  std::optional<std::int64_t> id;
  std::string name;
  json payload;

  bool operator==(const Envelope&) const = default;
};

json to_json(const Envelope& e);
// Keys are emitted in sorted order, so equal envelopes serialize to equal bytes.
std::string serialize(const Envelope& e);
// Throws BadPayload (or ParseError for invalid JSON).
Envelope parse(std::string_view text);
Envelope from_json(const json& j);

Envelope make_error(std::optional<std::int64_t> id, std::string name, ErrorCode code, const std::string& message);

}  // namespace skilladapt::bridge
