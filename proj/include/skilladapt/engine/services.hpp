#pragma once

#include <array>
#include <string_view>

namespace skilladapt::engine {

inline constexpr std::array<std::string_view, 13> kMotionServices{
    "list_demonstrations", "get_demonstration", "get_model",       "get_updated_model", "start_execution",
    "stop_execution",      "add_via_point",     "adapt_via_point", "delete_via_point",  "set_hid_enabled",
    "get_hid_state",       "apply_time_scale",  "add_repulsion"};

inline constexpr std::array<std::string_view, 3> kLlmServices{"set_llm_input_query", "get_llm_answer",
                                                              "transcribe_speech"};

inline constexpr std::array<std::string_view, 2> kTopics{"execution_status", "llm_notification"};

// Simulator and coverage hooks outside the sixteen-service inventory.
inline constexpr std::array<std::string_view, 4> kExtensionServices{"sim/inject_wrench", "coverage/start",
                                                                    "coverage/stop", "coverage/heatmap"};

inline constexpr std::size_t kServiceCount = kMotionServices.size() + kLlmServices.size();

bool is_service(std::string_view name);
bool is_extension(std::string_view name);
bool is_topic(std::string_view name);

}  // namespace skilladapt::engine
