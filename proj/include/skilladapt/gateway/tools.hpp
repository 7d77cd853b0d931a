#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skilladapt/error.hpp"
#include "skilladapt/kmp/time_profile.hpp"

namespace skilladapt::gateway {

using nlohmann::json;

enum class ParamKind { number, integer, string, array };
enum class TargetSkill { kmp, ergodic };
enum class CallOrigin { llm, test, ui };

std::string_view to_string(ParamKind k);
std::string_view to_string(TargetSkill t);
std::string_view to_string(CallOrigin o);
CallOrigin origin_from_string(std::string_view s);

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::number;
  std::string unit;
  std::string description;
  // Closed interval for numbers and for every element of an array.
  double min = 0.0;
  double max = 0.0;
  std::vector<std::string> allowed;  // string enums
  int length = 0;                    // arrays: exact element count
  bool required = true;
};

struct ToolSchema {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
  TargetSkill target = TargetSkill::kmp;
};

struct ToolCall {
  std::string tool;
  json args = json::object();
  CallOrigin origin = CallOrigin::test;
};

// Workspace box for positions, m. Tools only carry a 3-vector here; the
// box keeps every numeric argument finitely bounded.
inline constexpr double kWorkspaceMin = -1.5;
inline constexpr double kWorkspaceMax = 1.5;
inline constexpr double kMinRepulsionRadius = 0.001;

class ToolRegistry {
 public:
  // InvalidArgument on a duplicate name or an unbounded numeric parameter.
  void add(ToolSchema schema);
  const ToolSchema* find(std::string_view name) const;
  const std::vector<ToolSchema>& tools() const { return tools_; }
  std::size_t size() const { return tools_.size(); }

  // Function-calling "tools" array.
  json function_schemas() const;

 private:
  std::vector<ToolSchema> tools_;
};

ToolRegistry register_builtin_tools();

struct ValidationResult {
  bool ok = true;
  ErrorCode code = ErrorCode::InvalidArgument;
  std::string param;
  std::string message;

  explicit operator bool() const { return ok; }
};

ValidationResult validate_call(const ToolRegistry& registry, const ToolCall& call);

// What the gateway may touch. Implementations apply one validated call each.
class ToolTarget {
 public:
  virtual ~ToolTarget() = default;
  virtual std::vector<int> add_via_point(double time, const Vector3d& pos) = 0;
  virtual std::vector<int> add_repulsion(const Vector3d& center, double radius) = 0;
  virtual void time_scale(double percentage, double t_start, double t_end, kmp::ScaleMode mode) = 0;
  virtual void set_velocity(double v) = 0;
  virtual void set_force(double f) = 0;
  virtual void set_stiffness(double k) = 0;
  virtual void set_exec_state(std::string_view cmd) = 0;
};

enum class Outcome { applied, rejected, skipped };
std::string_view to_string(Outcome o);

struct DispatchRecord {
  ToolCall call;
  Outcome outcome = Outcome::rejected;
  std::string reason;
  std::vector<int> resulting_ids;
  double latency_s = 0.0;  // wall time of the query that produced it
};

// Validates, then routes to the target. Never throws for validation or
// target failures; those become rejected records.
DispatchRecord dispatch(const ToolRegistry& registry, const ToolCall& call, ToolTarget& target);

void to_json(json& j, const ToolCall& c);
void from_json(const json& j, ToolCall& c);
void to_json(json& j, const DispatchRecord& r);

// "SlowDown(percentage=50, t_start=0.2, t_end=0.6)"
std::string describe(const ToolCall& call);

}  // namespace skilladapt::gateway
