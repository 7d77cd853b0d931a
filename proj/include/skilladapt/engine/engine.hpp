#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>

#include "skilladapt/engine/llm_service.hpp"
#include "skilladapt/engine/services.hpp"
#include "skilladapt/ergodic/ergodic.hpp"
#include "skilladapt/gateway/tools.hpp"
#include "skilladapt/intention/energy_tank.hpp"
#include "skilladapt/kmp/kmp_model.hpp"
#include "skilladapt/kmp/time_profile.hpp"
#include "skilladapt/sim/executor.hpp"

namespace skilladapt::engine {

struct EngineConfig {
  std::filesystem::path demo_dir = "data/demos";
  int gmm_components = 12;
  int samples = 500;
  double nominal_duration = 10.0;  // s at unit speed
  std::uint64_t seed = 0x5eed;
  sim::ExecutionConfig execution;
  ergodic::ControllerOptions coverage;
  gateway::SessionConfig llm;
};

// Owns every skill model and simulator. Single-threaded: callers serialize
// access (the runtime's command queue does).
class Engine : public gateway::ToolTarget {
 public:
  using Publisher = std::function<void(std::string_view topic, const json& payload)>;

  explicit Engine(EngineConfig config = {}, std::unique_ptr<gateway::ChatBackend> backend = nullptr);

  const EngineConfig& config() const { return config_; }
  void set_publisher(Publisher p) { publish_ = std::move(p); }
  void publish(std::string_view topic, const json& payload) { emit(topic, payload); }

  // Registers a named demonstration set in memory (shadows files of the
  // same name).
  void add_demonstrations(const std::string& name, std::vector<kmp::Demonstration> demos);

  // Any of the sixteen services or an extension. LLM queries run
  // synchronously here; the runtime runs them off-thread instead.
  json call(std::string_view service, const json& payload);

  // Advances execution and coverage by `steps` control periods.
  void tick(int steps);
  bool active() const;

  json status_json() const;
  json context_json() const;

  bool has_model() const { return model_.has_value(); }
  const kmp::KmpModel& model() const;
  const kmp::KmpModel& original_model() const;
  const kmp::TimeProfile& profile() const { return profile_; }
  const ergodic::ErgodicController& coverage() const { return coverage_; }
  const intention::EnergyTankBank& hid() const { return hid_; }
  const sim::Executor* executor() const { return executor_.get(); }
  LlmService& llm() { return *llm_; }

  void fit(const std::string& demonstration_set);
  kmp::Trajectory updated_trajectory() const;
  kmp::Trajectory original_trajectory() const;

  // gateway::ToolTarget
  std::vector<int> add_via_point(double time, const Vector3d& pos) override;
  std::vector<int> add_repulsion(const Vector3d& center, double radius) override;
  void time_scale(double percentage, double t_start, double t_end, kmp::ScaleMode mode) override;
  void set_velocity(double v) override;
  void set_force(double f) override;
  void set_stiffness(double k) override;
  void set_exec_state(std::string_view cmd) override;

 private:
  json list_demonstrations() const;
  const std::vector<kmp::Demonstration>& demonstrations(const std::string& name);
  kmp::KmpModel& mutable_model();
  void require_idle(std::string_view what) const;
  Vector7d pose_with_current_orientation(double s, const json& payload) const;
  void emit(std::string_view topic, const json& payload);

  EngineConfig config_;
  Publisher publish_;
  std::map<std::string, std::vector<kmp::Demonstration>> demos_;
  std::string model_name_;
  std::optional<kmp::KmpModel> original_;
  std::optional<kmp::KmpModel> model_;
  kmp::TimeProfile profile_;
  intention::EnergyTankBank hid_;
  bool hid_enabled_ = true;
  std::unique_ptr<sim::Executor> executor_;
  ergodic::ErgodicController coverage_;
  int coverage_steps_ = 0;
  std::unique_ptr<LlmService> llm_;
};

json trajectory_json(const kmp::Trajectory& traj);

}  // namespace skilladapt::engine
