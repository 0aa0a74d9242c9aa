#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "roadscene/scene_model.hpp"

namespace roadscene {

nlohmann::json to_json(const Pose6D& p);
Pose6D pose_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LaneMap& m);
LaneMap lane_map_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CameraModel& c);
CameraModel camera_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PlacedVehicle& v);
PlacedVehicle vehicle_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SceneBox& b);
SceneBox scene_box_from_json(const nlohmann::json& j);

// Daylight sky: blue gradient above the horizon, grey ground below and a
// bright sun lobe around `sun_dir`.
EnvironmentMap procedural_sky(int h, int w, const Vec3& sun_dir, double sun_intensity = 40.0);

// Scene document. The skydome is referenced by path (PFM, relative to
// base_dir) or described by a "procedural_sky" object; it is never inlined.
nlohmann::json scene_to_json(const SceneState& state);
// Parses and validates; throws kSchemaViolation listing every violation.
SceneState scene_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");

SceneState load_scene(const std::filesystem::path& path);
// Writes the document (2-space indent, sorted keys, trailing newline); a
// loaded skydome without a path is written next to it as <stem>_sky.pfm.
void save_scene(const SceneState& state, const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace roadscene
