#include "skilladapt/bridge/hub.hpp"

#include <vector>

#include "skilladapt/engine/services.hpp"

namespace skilladapt::bridge {

namespace {
constexpr std::string_view kListService = "bridge/list";
}

Hub::Hub(Dispatcher dispatcher, std::size_t topic_depth) : dispatcher_(std::move(dispatcher)), depth_(topic_depth) {}

Hub::ClientId Hub::connect(std::function<void()> wake) {
  std::lock_guard lock(mutex_);
  const auto id = next_id_++;
  clients_[id].wake = std::move(wake);
  return id;
}

void Hub::disconnect(ClientId id) {
  std::lock_guard lock(mutex_);
  clients_.erase(id);
}

std::size_t Hub::client_count() const {
  std::lock_guard lock(mutex_);
  return clients_.size();
}

json Hub::inventory() {
  json services = json::array();
  for (auto s : engine::kMotionServices) services.push_back(s);
  for (auto s : engine::kLlmServices) services.push_back(s);
  json topics = json::array();
  for (auto t : engine::kTopics) topics.push_back(t);
  json ext = json::array();
  for (auto s : engine::kExtensionServices) ext.push_back(s);
  return {{"services", services}, {"topics", topics}, {"extensions", ext}};
}

void Hub::respond(ClientId id, const Envelope& e) {
  std::function<void()> wake;
  {
    std::lock_guard lock(mutex_);
    auto it = clients_.find(id);
    if (it == clients_.end()) return;  // client left before completion
    it->second.responses.push_back(serialize(e));
    wake = it->second.wake;
  }
  if (wake) wake();
}

void Hub::on_message(ClientId id, std::string_view text) {
  Envelope req;
  try {
    req = parse(text);
  } catch (const Error& e) {
    respond(id, make_error(std::nullopt, "", e.code(), e.what()));
    return;
  }
  switch (req.type) {
    case MessageType::subscribe:
    case MessageType::unsubscribe: {
      if (!engine::is_topic(req.name)) {
        respond(id, make_error(req.id, req.name, ErrorCode::UnknownTopic, "unknown topic '" + req.name + "'"));
        return;
      }
      {
        std::lock_guard lock(mutex_);
        auto it = clients_.find(id);
        if (it == clients_.end()) return;
        if (req.type == MessageType::subscribe) {
          it->second.subscriptions.insert(req.name);
        } else {
          it->second.subscriptions.erase(req.name);
        }
      }
      respond(id, {MessageType::service_response, req.id, req.name,
                   {{req.type == MessageType::subscribe ? "subscribed" : "unsubscribed", req.name}}});
      return;
    }
    case MessageType::service_request:
      break;
    default:
      respond(id, make_error(req.id, req.name, ErrorCode::BadPayload,
                             "clients may only send service_request, subscribe or unsubscribe"));
      return;
  }
  if (req.name == kListService) {
    respond(id, {MessageType::service_response, req.id, req.name, inventory()});
    return;
  }
  if (!engine::is_service(req.name) && !engine::is_extension(req.name)) {
    respond(id, make_error(req.id, req.name, ErrorCode::UnknownService, "unknown service '" + req.name + "'"));
    return;
  }
  auto rid = req.id;
  auto name = req.name;
  try {
    dispatcher_(req.name, req.payload, [this, id, rid, name](engine::CallResult r) {
      if (r.ok) {
        respond(id, {MessageType::service_response, rid, name, std::move(r.payload)});
      } else {
        respond(id, make_error(rid, name, r.code, r.message));
      }
    });
  } catch (const Error& e) {
    respond(id, make_error(rid, name, e.code(), e.what()));
  }
}

void Hub::publish(std::string_view topic, const json& payload) {
  if (!engine::is_topic(topic)) throw Error(ErrorCode::UnknownTopic, "unknown topic '" + std::string(topic) + "'");
  std::vector<std::function<void()>> wakes;
  {
    std::lock_guard lock(mutex_);
    const auto text = serialize({MessageType::topic_publish, ++publish_seq_, std::string(topic), payload});
    for (auto& [cid, c] : clients_) {
      if (!c.subscriptions.contains(topic)) continue;
      if (c.topics.size() >= depth_) {
        c.topics.pop_front();
        ++c.dropped;
      }
      c.topics.push_back(text);
      wakes.push_back(c.wake);
    }
  }
  for (auto& w : wakes) {
    if (w) w();
  }
}

std::optional<std::string> Hub::pop(ClientId id) {
  std::lock_guard lock(mutex_);
  auto it = clients_.find(id);
  if (it == clients_.end()) return std::nullopt;
  auto& c = it->second;
  auto& q = !c.responses.empty() ? c.responses : c.topics;
  if (q.empty()) return std::nullopt;
  auto out = std::move(q.front());
  q.pop_front();
  return out;
}

std::uint64_t Hub::dropped(ClientId id) const {
  std::lock_guard lock(mutex_);
  auto it = clients_.find(id);
  return it == clients_.end() ? 0 : it->second.dropped;
}

}  // namespace skilladapt::bridge
