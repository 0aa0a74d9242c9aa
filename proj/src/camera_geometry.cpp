#include "roadscene/camera_geometry.hpp"

#include <cmath>

#include "roadscene/error.hpp"

namespace roadscene {

Pose6D ViewDelta::transform() const { return {rotation_from_ypr(yaw, pitch, roll), translation}; }

bool ViewDelta::is_zero() const { return translation.isZero(0.0) && yaw == 0.0 && pitch == 0.0 && roll == 0.0; }

Pose6D apply_view_delta(const Pose6D& extrinsic, const ViewDelta& delta) {
  if (delta.is_zero()) return extrinsic;
  Pose6D out = delta.transform().compose(extrinsic);
  // Re-orthonormalize so long delta chains do not drift.
  Eigen::JacobiSVD<Mat3> svd(out.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  return out;
}

ViewDelta compose_deltas(const ViewDelta& first, const ViewDelta& second) {
  const Pose6D c = second.transform().compose(first.transform());
  const Vec3 ypr = ypr_from_rotation(c.rotation);
  ViewDelta d;
  d.translation = c.translation;
  d.yaw = ypr.x();
  d.pitch = ypr.y();
  d.roll = ypr.z();
  return d;
}

Ray pixel_ray(const CameraModel& camera, double u, double v) {
  if (!(u >= 0.0 && u <= camera.width && v >= 0.0 && v <= camera.height))
    throw Error(ErrorCode::kOutOfRange, "pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                                            ") outside camera '" + camera.id + "'");
  const auto& k = camera.intrinsics;
  const Vec3 d_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  Ray r;
  r.origin = camera.extrinsic.translation;
  r.direction = (camera.extrinsic.rotation * d_cam).normalized();
  return r;
}

std::optional<Vec2> project_point(const CameraModel& camera, const Vec3& p) {
  const Vec3 c = camera.extrinsic.inverse().apply(p);
  if (c.z() <= 1e-9) return std::nullopt;
  const auto& k = camera.intrinsics;
  return Vec2(k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy);
}

AlignmentResult align_cameras(const AlignmentInput& input) {
  auto m0 = input.recalibrated.find({0, 0});
  auto m1 = input.recalibrated.find({0, 1});
  if (m0 == input.recalibrated.end() || m1 == input.recalibrated.end())
    throw Error(ErrorCode::kInvalidArgument, "front camera must be present at triggers 0 and 1");

  const double dm = (m1->second.translation - m0->second.translation).norm();
  const double dv = (input.vehicle_front_t1.translation - input.vehicle_front_t0.translation).norm();
  if (!(dm > 0.0) || !(dv > 0.0))
    throw Error(ErrorCode::kDegenerate, "anchor poses coincide; scale is undefined",
                {{"delta_external", dm}, {"delta_vehicle", dv}});

  AlignmentResult out;
  out.scale = dm / dv;
  const Mat3 rv0 = input.vehicle_front_t0.rotation;
  const Mat3 a = rv0 * m0->second.rotation.transpose();
  const Vec3 tm0 = m0->second.translation;
  const Vec3 tv0 = input.vehicle_front_t0.translation;
  for (const auto& [key, pose] : input.recalibrated) {
    Pose6D p;
    p.rotation = a * pose.rotation;
    p.translation = a * (pose.translation - tm0) / out.scale + tv0;
    out.poses[key] = p;
  }
  return out;
}

double pose_distance(const Pose6D& a, const Pose6D& b) {
  return (a.rotation - b.rotation).norm() + (a.translation - b.translation).norm();
}

}  // namespace roadscene
