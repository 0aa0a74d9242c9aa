#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "roadscene/pose.hpp"
#include "roadscene/scene_model.hpp"

namespace roadscene {

enum class Sector { kFront, kLeftFront, kRightFront, kLeft, kRight, kBack };
enum class DrivingDirection { kTowardEgo, kAwayFromEgo };
enum class MotionAction { kStraight, kTurnLeft, kTurnRight, kPark, kBackward };
enum class Relation { kFront, kBehind, kLeft, kRight };

std::string_view to_string(Sector s);
std::string_view to_string(DrivingDirection d);
std::string_view to_string(MotionAction a);
std::string_view to_string(Relation r);
std::optional<Sector> sector_from_string(std::string_view s);
std::optional<DrivingDirection> driving_direction_from_string(std::string_view s);
std::optional<MotionAction> motion_action_from_string(std::string_view s);
std::optional<Relation> relation_from_string(std::string_view s);

struct MotionAttributes {
  // Position.
  std::optional<std::pair<double, double>> distance_range;  // (d_min, d_max) m
  Sector sector = Sector::kFront;
  // Unset only for placements relative to another vehicle, which then follow
  // the reference vehicle's direction.
  std::optional<DrivingDirection> driving_direction = DrivingDirection::kAwayFromEgo;
  bool crazy_mode = false;
  // Relative placement ("behind the Porsche").
  std::optional<Relation> relation;
  std::string reference_id;
  bool chase = false;
  // Movement.
  double speed = 8.0;  // m/s
  MotionAction action = MotionAction::kStraight;
  double duration = 4.0;  // s

  bool operator==(const MotionAttributes&) const = default;
};

struct MotionSettings {
  double crop_front = 80.0;
  double crop_side = 20.0;
  double off_road_threshold = 2.0;
  int max_refine_iters = 5;
  double max_curvature = 0.2;  // 1/m
  double dt = 0.1;
  double chase_gap = 10.0;
  double occupancy_margin = 1.0;  // added to half the asset length
  double turn_lateral_min = 5.0;
  double turn_lateral_max = 30.0;
};

struct Occupancy {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
};

struct PlacementQuery {
  MotionAttributes attributes;
  std::vector<Occupancy> occupied;
  std::uint64_t seed = 0;
  // Pose of attributes.reference_id when attributes.relation is set.
  std::optional<VehiclePose> reference;
};

struct Placement {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
  std::size_t node_index = 0;  // index into the map passed to place_vehicle
};

struct BezierSegment {
  Vec2 p0 = Vec2::Zero(), p1 = Vec2::Zero(), p2 = Vec2::Zero(), p3 = Vec2::Zero();

  Vec2 point(double t) const;
  Vec2 derivative(double t) const;
  Vec2 midpoint() const { return point(0.5); }
  bool operator==(const BezierSegment&) const = default;
};

struct RefineResult {
  std::vector<BezierSegment> segments;
  int iterations = 0;
  int remaining_off_road = 0;
};

// Keeps nodes whose midpoint lies in the ego-frame box x in [0, 80], |y| <= 20.
LaneMap crop_map(const LaneMap& map, const Pose6D& ego, const MotionSettings& settings = {});

// Bearing-based sector: front |theta| <= 30 deg, left_front (30, 80], left
// (80, 135], back beyond 135, mirrored for the right. Throws kInvalidArgument
// at the origin.
Sector classify_sector(const Vec2& point);

// True when a vehicle at `midpoint` moving along `direction` (both ego frame)
// is heading toward the ego vehicle.
bool is_toward_ego(const Vec2& midpoint, const Vec2& direction);

// Throws kNoFeasiblePlacement when no candidate survives the filters.
Placement place_vehicle(const PlacementQuery& query, const LaneMap& map, const Pose6D& ego = Pose6D::identity(),
                        const MotionSettings& settings = {});

// Throws kNoFeasibleDestination (turns without candidates) or
// kInvalidArgument (empty map).
VehiclePose plan_destination(const VehiclePose& start, const MotionAttributes& attrs, const LaneMap& map,
                             std::uint64_t seed, const MotionSettings& settings = {});

// P1 = P0 + (L/3) d0, P2 = P3 - (L/3) d1, L = |P3 - P0|. Throws
// kInvalidArgument for coincident endpoints or non-unit directions.
BezierSegment solve_bezier(const Vec2& p_start, const Vec2& dir_start, const Vec2& p_end, const Vec2& dir_end);

// Distance from `p` to the nearest centerline node midpoint (infinity for
// maps without centerlines).
double off_road_distance(const Vec2& p, const LaneMap& map);

// Off-road test points per segment: B(k / kRefineProbes), k = 1 .. kRefineProbes - 1.
inline constexpr int kRefineProbes = 32;

// Splits segments with an off-road probe at the nearest centerline node
// (the midpoint's node when the midpoint itself is off-road). A split is kept
// only when neither half is worse than its parent.
RefineResult refine_on_road(const std::vector<BezierSegment>& segments, const LaneMap& map, int max_iters,
                            double threshold = 2.0);

// Largest off-road distance over the probes of all segments.
double worst_off_road(const std::vector<BezierSegment>& segments, const LaneMap& map);

// Curvature-limited pursuit of the path at speed * dt spacing. Throws
// kInvalidArgument for a zero-length path or non-positive speed / dt.
Trajectory track_trajectory(const std::vector<BezierSegment>& segments, double speed, double dt,
                            double max_curvature);

Trajectory hold_trajectory(const VehiclePose& pose, double duration, double dt);

double within_road_rate(const Trajectory& traj, const LaneMap& map, double threshold = 2.0);

// Mean speed over the trajectory (path length / elapsed time).
double mean_speed(const Trajectory& traj);

struct MotionPlan {
  VehiclePose start;
  VehiclePose destination;
  std::vector<BezierSegment> segments;
  Trajectory trajectory;
  int remaining_off_road = 0;
};

// Destination, Bezier fit, refinement and tracking for one vehicle.
MotionPlan plan_motion(const VehiclePose& start, const MotionAttributes& attrs, const LaneMap& map,
                       std::uint64_t seed, const MotionSettings& settings = {});

}  // namespace roadscene
