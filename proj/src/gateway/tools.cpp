#include "skilladapt/gateway/tools.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace skilladapt::gateway {

std::string_view to_string(ParamKind k) {
  switch (k) {
    case ParamKind::number:
      return "number";
    case ParamKind::integer:
      return "integer";
    case ParamKind::string:
      return "string";
    case ParamKind::array:
      return "array";
  }
  return "number";
}

std::string_view to_string(TargetSkill t) { return t == TargetSkill::kmp ? "kmp" : "ergodic"; }

std::string_view to_string(CallOrigin o) {
  switch (o) {
    case CallOrigin::llm:
      return "llm";
    case CallOrigin::test:
      return "test";
    case CallOrigin::ui:
      return "ui";
  }
  return "test";
}

CallOrigin origin_from_string(std::string_view s) {
  if (s == "llm") return CallOrigin::llm;
  if (s == "ui") return CallOrigin::ui;
  if (s == "test") return CallOrigin::test;
  throw Error(ErrorCode::BadPayload, "unknown call origin '" + std::string(s) + "'");
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::applied:
      return "applied";
    case Outcome::rejected:
      return "rejected";
    case Outcome::skipped:
      return "skipped";
  }
  return "rejected";
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string bounds_text(const ParamSpec& p) { return "[" + fmt(p.min) + ", " + fmt(p.max) + "]"; }

ParamSpec number(std::string name, double lo, double hi, std::string unit, std::string description) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = ParamKind::number;
  p.min = lo;
  p.max = hi;
  p.unit = std::move(unit);
  p.description = std::move(description);
  return p;
}

ParamSpec position(std::string description) {
  ParamSpec p = number("pos", kWorkspaceMin, kWorkspaceMax, "m", std::move(description));
  p.kind = ParamKind::array;
  p.length = 3;
  return p;
}

ToolSchema retime(std::string name, std::string description) {
  return {std::move(name),
          std::move(description),
          {number("percentage", 1.0, 100.0, "%", "Speed change in percent"),
           number("t_start", 0.0, 1.0, "", "Window start in normalized time"),
           number("t_end", 0.0, 1.0, "", "Window end in normalized time")},
          TargetSkill::kmp};
}

}  // namespace

void ToolRegistry::add(ToolSchema schema) {
  if (find(schema.name)) throw Error(ErrorCode::InvalidArgument, "tool '" + schema.name + "' already registered");
  for (const auto& p : schema.params) {
    const bool numeric = p.kind != ParamKind::string;
    if (numeric && !(std::isfinite(p.min) && std::isfinite(p.max) && p.min <= p.max)) {
      throw Error(ErrorCode::InvalidArgument, "parameter '" + p.name + "' needs finite bounds");
    }
  }
  tools_.push_back(std::move(schema));
}

const ToolSchema* ToolRegistry::find(std::string_view name) const {
  auto it = std::find_if(tools_.begin(), tools_.end(), [&](const ToolSchema& t) { return t.name == name; });
  return it == tools_.end() ? nullptr : &*it;
}

json ToolRegistry::function_schemas() const {
  json out = json::array();
  for (const auto& t : tools_) {
    json props = json::object();
    json required = json::array();
    for (const auto& p : t.params) {
      json prop;
      std::string desc = p.description;
      if (!p.unit.empty()) desc += " [" + p.unit + "]";
      prop["description"] = desc;
      switch (p.kind) {
        case ParamKind::number:
        case ParamKind::integer:
          prop["type"] = std::string(to_string(p.kind));
          prop["minimum"] = p.min;
          prop["maximum"] = p.max;
          break;
        case ParamKind::string:
          prop["type"] = "string";
          prop["enum"] = p.allowed;
          break;
        case ParamKind::array:
          prop["type"] = "array";
          prop["items"] = {{"type", "number"}, {"minimum", p.min}, {"maximum", p.max}};
          prop["minItems"] = p.length;
          prop["maxItems"] = p.length;
          break;
      }
      props[p.name] = prop;
      if (p.required) required.push_back(p.name);
    }
    out.push_back({{"type", "function"},
                   {"function",
                    {{"name", t.name},
                     {"description", t.description},
                     {"parameters", {{"type", "object"}, {"properties", props}, {"required", required}}}}}});
  }
  return out;
}

ToolRegistry register_builtin_tools() {
  ToolRegistry r;
  r.add({"AddViaPoints",
         "Force the trajectory through a position at a normalized time",
         {number("time", 0.0, 1.0, "", "Normalized trajectory time"), position("Target position")},
         TargetSkill::kmp});
  r.add({"AddRepulsion",
         "Bend the trajectory around a spherical obstacle",
         {position("Obstacle center"), number("radius", kMinRepulsionRadius, 1.0, "m", "Obstacle radius")},
         TargetSkill::kmp});
  r.add(retime("SlowDown", "Slow the motion down inside a time window"));
  r.add(retime("SpeedUp", "Speed the motion up inside a time window"));
  r.add({"SetVelocity",
         "Set the coverage velocity limit",
         {number("velocity", 3.0, 16.0, "", "Velocity limit (dimensionless)")},
         TargetSkill::ergodic});
  r.add({"SetForce",
         "Set the contact normal force setpoint",
         {number("force", 5.0, 30.0, "N", "Normal force")},
         TargetSkill::ergodic});
  r.add({"SetStiffness",
         "Set the surface-tangential translational stiffness",
         {number("stiffness", 500.0, 2000.0, "N/m", "Tangential stiffness")},
         TargetSkill::ergodic});
  ParamSpec state;
  state.name = "state";
  state.kind = ParamKind::string;
  state.allowed = {"pause", "resume"};
  state.description = "Pause or resume coverage execution";
  r.add({"SetExecState", "Pause or resume coverage execution", {state}, TargetSkill::ergodic});
  return r;
}

namespace {

ValidationResult fail(ErrorCode code, const std::string& param, std::string message) {
  return {false, code, param, std::move(message)};
}

bool in_bounds(double v, const ParamSpec& p) { return std::isfinite(v) && v >= p.min && v <= p.max; }

ValidationResult out_of_bounds(const ParamSpec& p, const std::string& value) {
  return fail(ErrorCode::OutOfBounds, p.name,
              "OutOfBounds(\"" + p.name + "\", " + value + ", " + bounds_text(p) + ")");
}

}  // namespace

ValidationResult validate_call(const ToolRegistry& registry, const ToolCall& call) {
  const auto* schema = registry.find(call.tool);
  if (!schema) return fail(ErrorCode::UnknownTool, "", "UnknownTool(\"" + call.tool + "\")");
  if (!call.args.is_object()) return fail(ErrorCode::BadPayload, "", "arguments must be an object");
  for (const auto& p : schema->params) {
    if (!call.args.contains(p.name)) {
      if (p.required) return fail(ErrorCode::MissingParam, p.name, "MissingParam(\"" + p.name + "\")");
      continue;
    }
    const auto& v = call.args.at(p.name);
    switch (p.kind) {
      case ParamKind::number:
      case ParamKind::integer: {
        if (!v.is_number()) return fail(ErrorCode::BadPayload, p.name, "'" + p.name + "' must be a number");
        if (p.kind == ParamKind::integer && !v.is_number_integer()) {
          return fail(ErrorCode::BadPayload, p.name, "'" + p.name + "' must be an integer");
        }
        const double x = v.get<double>();
        if (!in_bounds(x, p)) return out_of_bounds(p, fmt(x));
        break;
      }
      case ParamKind::string: {
        if (!v.is_string()) return fail(ErrorCode::BadPayload, p.name, "'" + p.name + "' must be a string");
        const auto s = v.get<std::string>();
        if (std::find(p.allowed.begin(), p.allowed.end(), s) == p.allowed.end()) {
          return fail(ErrorCode::OutOfBounds, p.name,
                      "OutOfBounds(\"" + p.name + "\", \"" + s + "\", " + json(p.allowed).dump() + ")");
        }
        break;
      }
      case ParamKind::array: {
        if (!v.is_array() || static_cast<int>(v.size()) != p.length) {
          return fail(ErrorCode::BadPayload, p.name,
                      "'" + p.name + "' must be an array of " + std::to_string(p.length) + " numbers");
        }
        for (const auto& e : v) {
          if (!e.is_number()) return fail(ErrorCode::BadPayload, p.name, "'" + p.name + "' must hold numbers");
          if (!in_bounds(e.get<double>(), p)) return out_of_bounds(p, v.dump());
        }
        break;
      }
    }
  }
  return {};
}

namespace {

Vector3d vec3(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

}  // namespace

DispatchRecord dispatch(const ToolRegistry& registry, const ToolCall& call, ToolTarget& target) {
  DispatchRecord rec;
  rec.call = call;
  const auto v = validate_call(registry, call);
  if (!v) {
    rec.outcome = Outcome::rejected;
    rec.reason = v.message;
    return rec;
  }
  const auto& a = call.args;
  try {
    if (call.tool == "AddViaPoints") {
      rec.resulting_ids = target.add_via_point(a.at("time").get<double>(), vec3(a.at("pos")));
    } else if (call.tool == "AddRepulsion") {
      rec.resulting_ids = target.add_repulsion(vec3(a.at("pos")), a.at("radius").get<double>());
    } else if (call.tool == "SlowDown" || call.tool == "SpeedUp") {
      target.time_scale(a.at("percentage").get<double>(), a.at("t_start").get<double>(),
                        a.at("t_end").get<double>(),
                        call.tool == "SlowDown" ? kmp::ScaleMode::slow : kmp::ScaleMode::fast);
    } else if (call.tool == "SetVelocity") {
      target.set_velocity(a.at("velocity").get<double>());
    } else if (call.tool == "SetForce") {
      target.set_force(a.at("force").get<double>());
    } else if (call.tool == "SetStiffness") {
      target.set_stiffness(a.at("stiffness").get<double>());
    } else if (call.tool == "SetExecState") {
      target.set_exec_state(a.at("state").get<std::string>());
    } else {
      rec.outcome = Outcome::rejected;
      rec.reason = "tool '" + call.tool + "' has no dispatch route";
      return rec;
    }
    rec.outcome = Outcome::applied;
  } catch (const Error& e) {
    rec.outcome = Outcome::rejected;
    rec.reason = std::string(to_string(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    rec.outcome = Outcome::rejected;
    rec.reason = e.what();
  }
  return rec;
}

void to_json(json& j, const ToolCall& c) {
  j = {{"tool", c.tool}, {"args", c.args}, {"origin", std::string(to_string(c.origin))}};
}

void from_json(const json& j, ToolCall& c) {
  if (!j.is_object() || !j.contains("tool") || !j.at("tool").is_string()) {
    throw Error(ErrorCode::BadPayload, "tool call needs a string 'tool'");
  }
  c.tool = j.at("tool").get<std::string>();
  c.args = j.value("args", json::object());
  c.origin = origin_from_string(j.value("origin", std::string("test")));
}

void to_json(json& j, const DispatchRecord& r) {
  j = {{"call", r.call},
       {"outcome", std::string(to_string(r.outcome))},
       {"reason", r.reason},
       {"resulting_ids", r.resulting_ids},
       {"latency_s", r.latency_s}};
}

std::string describe(const ToolCall& call) {
  std::string out = call.tool + "(";
  bool first = true;
  if (call.args.is_object()) {
    for (const auto& [k, v] : call.args.items()) {
      if (!first) out += ", ";
      first = false;
      out += k + "=" + v.dump();
    }
  }
  return out + ")";
}

}  // namespace skilladapt::gateway
