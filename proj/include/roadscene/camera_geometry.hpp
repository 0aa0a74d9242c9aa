#pragma once

#include <map>
#include <utility>
#include <vector>

#include "roadscene/pose.hpp"
#include "roadscene/scene_model.hpp"

namespace roadscene {

// Camera-pose adjustment expressed in the ego frame.
struct ViewDelta {
  Vec3 translation = Vec3::Zero();
  double yaw = 0.0;  // radians
  double pitch = 0.0;
  double roll = 0.0;

  Pose6D transform() const;
  bool is_zero() const;
};

// T_delta * extrinsic with T_delta(x) = R(yaw, pitch, roll) x + translation.
Pose6D apply_view_delta(const Pose6D& extrinsic, const ViewDelta& delta);

// Single delta equivalent to applying `first` and then `second`.
ViewDelta compose_deltas(const ViewDelta& first, const ViewDelta& second);

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();

  Vec3 at(double t) const { return origin + t * direction; }
};

// Back-projects the continuous pixel position (u, v); pixel (i, j) has its
// center at (i + 0.5, j + 0.5). Throws kOutOfRange outside [0, w] x [0, h].
Ray pixel_ray(const CameraModel& camera, double u, double v);

// Projects an ego-frame point; nullopt behind the camera.
std::optional<Vec2> project_point(const CameraModel& camera, const Vec3& p);

// Key for the alignment input/output maps: (camera index, trigger index).
using CameraTrigger = std::pair<int, int>;

struct AlignmentInput {
  // Poses from the external recalibration, in its own unified space.
  std::map<CameraTrigger, Pose6D> recalibrated;
  // Front camera (index 0) poses at triggers 0 and 1 in vehicle space.
  Pose6D vehicle_front_t0;
  Pose6D vehicle_front_t1;
};

struct AlignmentResult {
  std::map<CameraTrigger, Pose6D> poses;
  double scale = 1.0;  // S
};

// Maps every recalibrated pose into vehicle space with the anchor formulas:
//   R = R_V0 R_M0^T R_M
//   T = R_V0 R_M0^T (T_M - T_M0) / S + T_V0,   S = |dT_M| / |dT_V|.
// Throws kDegenerate when either anchor pair coincides, kInvalidArgument when
// the front camera is missing at trigger 0 or 1.
AlignmentResult align_cameras(const AlignmentInput& input);

// Max over poses of rotation Frobenius error plus translation error.
double pose_distance(const Pose6D& a, const Pose6D& b);

}  // namespace roadscene
