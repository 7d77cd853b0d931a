#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "skilladapt/kmp/kmp_model.hpp"
#include "skilladapt/kmp/time_profile.hpp"

namespace skilladapt::kmp {

inline constexpr int kModelSchemaVersion = 1;

// One JSON object per line: {"t", "pos", "quat", "wrench"?}. Blank lines are
// skipped. Validation of the demonstration invariants is left to callers.
Demonstration read_demonstration(std::istream& in);
Demonstration load_demonstration(const std::filesystem::path& path);
void write_demonstration(std::ostream& out, const Demonstration& demo);

// Every *.jsonl file in `dir`, sorted by file name.
std::vector<std::filesystem::path> list_demonstration_files(const std::filesystem::path& dir);

nlohmann::json pose_to_json(const Vector7d& pose);
Vector7d pose_from_json(const nlohmann::json& j);
nlohmann::json via_point_to_json(const ViaPoint& via);

nlohmann::json model_to_json(const KmpModel& model);
KmpModel model_from_json(const nlohmann::json& doc);

// CSV with header t,s,x,y,z,qw,qx,qy,qz; fixed 9 significant decimals.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace skilladapt::kmp
