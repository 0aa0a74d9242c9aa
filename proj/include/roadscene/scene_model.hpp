#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadscene/edit_config.hpp"
#include "roadscene/environment_map.hpp"
#include "roadscene/math.hpp"
#include "roadscene/pose.hpp"

// Ego frame convention: x forward, y left, z up; headings CCW from +x.
// SI units everywhere (meters, seconds, radians); degrees appear only in the
// command language.

namespace roadscene {

enum class LaneType { kCenterline, kBoundary, kOther };

std::string_view to_string(LaneType t);
std::optional<LaneType> lane_type_from_string(std::string_view s);

struct LaneNode {
  Vec2 start = Vec2::Zero();
  Vec2 end = Vec2::Zero();
  LaneType type = LaneType::kCenterline;

  Vec2 midpoint() const { return 0.5 * (start + end); }
  double length() const { return (end - start).norm(); }
  Vec2 direction() const { return (end - start).normalized(); }
  double heading() const { return std::atan2(end.y() - start.y(), end.x() - start.x()); }
  LaneNode reversed() const { return {end, start, type}; }
};

struct LaneMap {
  std::vector<LaneNode> nodes;
  std::string frame = "ego";
};

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

// Pinhole camera, OpenCV axes (x right, y down, z along the optical axis).
// `extrinsic` maps camera coordinates into the ego frame.
struct CameraModel {
  std::string id;
  Intrinsics intrinsics;
  int width = 1;
  int height = 1;
  Pose6D extrinsic;
  double exposure = 0.01;  // seconds
};

struct CameraRig {
  std::vector<CameraModel> cameras;
  std::string reference_camera;

  const CameraModel* find(std::string_view id) const;
  CameraModel* find(std::string_view id);
  // Throws kInvalidArgument when the reference camera is missing.
  const CameraModel& reference() const;
};

struct ExposureStats {
  double mean = 0.01;
  double std = 0.0;
  double epsilon = 0.5;

  // Population mean / standard deviation of the given exposure times.
  static ExposureStats from_exposures(std::span<const double> exposures, double epsilon = 0.5);
  static ExposureStats from_rig(const CameraRig& rig, double epsilon = 0.5);
};

struct TrajectorySample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  bool operator==(const TrajectorySample&) const = default;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double dt = 0.1;

  double start_time() const { return samples.front().t; }
  double end_time() const { return samples.back().t; }
  // Linear position / shortest-arc heading interpolation. Throws kOutOfRange
  // outside [start_time, end_time].
  TrajectorySample at(double t) const;
  // Same, but holds the first / last sample outside the recorded range.
  TrajectorySample at_clamped(double t) const;

  bool operator==(const Trajectory&) const = default;
};

// Stationary (or constant-velocity straight) trajectory helpers.
Trajectory constant_pose_trajectory(double x, double y, double heading, double duration, double dt);
Trajectory straight_trajectory(double x, double y, double heading, double speed, double duration, double dt);

struct VehiclePose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  bool operator==(const VehiclePose&) const = default;
};

struct PlacedVehicle {
  std::string instance_id;
  std::string asset_id;
  VehiclePose pose;
  std::optional<Trajectory> trajectory;
  // Free-form document: type, color, origin ("scene" | "added"), dimensions, ...
  nlohmann::json attributes = nlohmann::json::object();

  VehiclePose pose_at(double t) const;
  bool is_added() const;
  bool operator==(const PlacedVehicle&) const = default;
};

// Static background primitive: an axis-aligned box of homogeneous medium.
struct SceneBox {
  std::string name;
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  double density = 0.0;  // 1/m
  Rgb radiance = Rgb::Zero();
  std::uint16_t label = 0;  // instance label for segmentation; 0 = stuff
  bool operator==(const SceneBox& o) const {
    return name == o.name && min == o.min && max == o.max && density == o.density &&
           (radiance == o.radiance).all() && label == o.label;
  }
};

struct SceneState {
  LaneMap lane_map;
  CameraRig rig;
  std::vector<PlacedVehicle> vehicles;
  std::set<std::string> deleted_ids;
  std::optional<EnvironmentMap> skydome;
  std::string skydome_path;
  // Parameters of a procedural sky (see scene_io.hpp); null when the skydome
  // comes from a file.
  nlohmann::json sky_spec;
  std::vector<EditConfig> history;

  Trajectory ego = constant_pose_trajectory(0, 0, 0, 3.9, 0.1);
  std::vector<SceneBox> geometry;
  // Accumulated view adjustment applied to every rig extrinsic.
  Pose6D view_offset;
  double exposure_epsilon = 0.5;

  const PlacedVehicle* find_vehicle(std::string_view id) const;
  PlacedVehicle* find_vehicle(std::string_view id);
};

// Empty iff every type invariant holds. Never throws, never mutates.
std::vector<Violation> validate_scene(const SceneState& state);

// Ego pose at time t as a 6-DoF transform (heading about +z). Throws
// kOutOfRange outside the recorded ego trajectory.
Pose6D ego_frame(const SceneState& state, double t);

// Shortest-arc interpolation between two headings, result in (-pi, pi].
double interpolate_heading(double a, double b, double s);

}  // namespace roadscene
