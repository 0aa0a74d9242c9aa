#include "roadscene/scene_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "roadscene/error.hpp"

namespace roadscene {

std::string_view to_string(LaneType t) {
  switch (t) {
    case LaneType::kCenterline: return "centerline";
    case LaneType::kBoundary: return "boundary";
    case LaneType::kOther: return "other";
  }
  return "other";
}

std::optional<LaneType> lane_type_from_string(std::string_view s) {
  if (s == "centerline") return LaneType::kCenterline;
  if (s == "boundary") return LaneType::kBoundary;
  if (s == "other") return LaneType::kOther;
  return std::nullopt;
}

const CameraModel* CameraRig::find(std::string_view id) const {
  for (const auto& c : cameras)
    if (c.id == id) return &c;
  return nullptr;
}

CameraModel* CameraRig::find(std::string_view id) {
  for (auto& c : cameras)
    if (c.id == id) return &c;
  return nullptr;
}

const CameraModel& CameraRig::reference() const {
  const CameraModel* c = find(reference_camera);
  if (!c) throw Error(ErrorCode::kInvalidArgument, "reference camera '" + reference_camera + "' not in rig");
  return *c;
}

ExposureStats ExposureStats::from_exposures(std::span<const double> exposures, double epsilon) {
  if (exposures.empty()) throw Error(ErrorCode::kInvalidArgument, "no exposures");
  ExposureStats s;
  s.epsilon = epsilon;
  const double n = static_cast<double>(exposures.size());
  s.mean = std::accumulate(exposures.begin(), exposures.end(), 0.0) / n;
  double var = 0.0;
  for (double e : exposures) var += (e - s.mean) * (e - s.mean);
  s.std = std::sqrt(var / n);
  return s;
}

ExposureStats ExposureStats::from_rig(const CameraRig& rig, double epsilon) {
  std::vector<double> e;
  e.reserve(rig.cameras.size());
  for (const auto& c : rig.cameras) e.push_back(c.exposure);
  return from_exposures(e, epsilon);
}

double interpolate_heading(double a, double b, double s) { return wrap_angle(a + s * wrap_angle(b - a)); }

namespace {

TrajectorySample lerp(const TrajectorySample& a, const TrajectorySample& b, double t) {
  const double s = (t - a.t) / (b.t - a.t);
  return {t, a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), interpolate_heading(a.heading, b.heading, s)};
}

}  // namespace

TrajectorySample Trajectory::at(double t) const {
  if (samples.empty()) throw Error(ErrorCode::kOutOfRange, "empty trajectory");
  if (!(t >= start_time() && t <= end_time()))
    throw Error(ErrorCode::kOutOfRange, "time " + std::to_string(t) + " outside trajectory [" +
                                            std::to_string(start_time()) + ", " + std::to_string(end_time()) + "]");
  auto it = std::lower_bound(samples.begin(), samples.end(), t,
                             [](const TrajectorySample& s, double v) { return s.t < v; });
  if (it->t == t) return *it;
  return lerp(*(it - 1), *it, t);
}

TrajectorySample Trajectory::at_clamped(double t) const {
  if (samples.empty()) throw Error(ErrorCode::kOutOfRange, "empty trajectory");
  if (t <= start_time()) {
    TrajectorySample s = samples.front();
    s.t = t;
    return s;
  }
  if (t >= end_time()) {
    TrajectorySample s = samples.back();
    s.t = t;
    return s;
  }
  return at(t);
}

Trajectory constant_pose_trajectory(double x, double y, double heading, double duration, double dt) {
  return straight_trajectory(x, y, heading, 0.0, duration, dt);
}

Trajectory straight_trajectory(double x, double y, double heading, double speed, double duration, double dt) {
  if (!(dt > 0.0) || !(duration > 0.0)) throw Error(ErrorCode::kInvalidArgument, "duration and dt must be positive");
  const int n = std::max(2, static_cast<int>(std::llround(duration / dt)) + 1);
  Trajectory tr;
  tr.dt = dt;
  tr.samples.reserve(static_cast<std::size_t>(n));
  const Vec2 d = heading_vector(heading);
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    tr.samples.push_back({t, x + d.x() * speed * t, y + d.y() * speed * t, wrap_angle(heading)});
  }
  return tr;
}

VehiclePose PlacedVehicle::pose_at(double t) const {
  if (!trajectory || trajectory->samples.empty()) return pose;
  const TrajectorySample s = trajectory->at_clamped(t);
  return {s.x, s.y, s.heading};
}

bool PlacedVehicle::is_added() const {
  auto it = attributes.find("origin");
  return it != attributes.end() && it->is_string() && it->get<std::string>() == "added";
}

const PlacedVehicle* SceneState::find_vehicle(std::string_view id) const {
  for (const auto& v : vehicles)
    if (v.instance_id == id) return &v;
  return nullptr;
}

PlacedVehicle* SceneState::find_vehicle(std::string_view id) {
  for (auto& v : vehicles)
    if (v.instance_id == id) return &v;
  return nullptr;
}

namespace {

void check_pose(const Pose6D& p, const std::string& field, std::vector<Violation>& out) {
  if (!p.rotation.allFinite() || !p.translation.allFinite()) {
    out.push_back({field, "finite", "pose contains non-finite values"});
    return;
  }
  const double err = p.orthonormality_error();
  if (err > kOrthonormalTolerance) {
    out.push_back({field + ".rotation", "orthonormal",
                   "||R^T R - I|| = " + std::to_string(err) + " exceeds 1e-9"});
    return;
  }
  if (p.rotation.determinant() <= 0.0) out.push_back({field + ".rotation", "determinant", "det(R) must be +1"});
}

void check_trajectory(const Trajectory& tr, const std::string& field, std::vector<Violation>& out) {
  if (tr.samples.size() < 2) {
    out.push_back({field, "min_samples", "trajectory needs at least 2 samples"});
    return;
  }
  if (!(tr.dt > 0.0)) {
    out.push_back({field + ".dt", "positive", "dt must be positive"});
    return;
  }
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    const auto& s = tr.samples[i];
    if (!std::isfinite(s.t) || !std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.heading)) {
      out.push_back({field + ".samples[" + std::to_string(i) + "]", "finite", "non-finite sample"});
      return;
    }
    if (i > 0) {
      const double step = s.t - tr.samples[i - 1].t;
      if (!(step > 0.0)) {
        out.push_back({field + ".samples[" + std::to_string(i) + "]", "increasing", "timestamps must increase"});
        return;
      }
      if (std::abs(step - tr.dt) > 1e-6 * std::max(1.0, tr.dt)) {
        out.push_back({field + ".samples[" + std::to_string(i) + "]", "uniform_dt", "sample spacing differs from dt"});
        return;
      }
    }
  }
}

}  // namespace

std::vector<Violation> validate_scene(const SceneState& state) {
  std::vector<Violation> out;

  for (std::size_t i = 0; i < state.lane_map.nodes.size(); ++i) {
    const auto& n = state.lane_map.nodes[i];
    const std::string f = "lane_map.nodes[" + std::to_string(i) + "]";
    if (!is_finite(n.start) || !is_finite(n.end))
      out.push_back({f, "finite", "lane node coordinates must be finite"});
    else if (n.start == n.end)
      out.push_back({f, "distinct_endpoints", "lane node start equals end"});
  }

  std::map<std::string, int> camera_ids;
  for (std::size_t i = 0; i < state.rig.cameras.size(); ++i) {
    const auto& c = state.rig.cameras[i];
    const std::string f = "rig.cameras[" + std::to_string(i) + "]";
    if (++camera_ids[c.id] == 2) out.push_back({f + ".id", "unique", "duplicate camera id '" + c.id + "'"});
    if (!(c.exposure > 0.0)) out.push_back({f + ".exposure", "positive", "exposure must be > 0"});
    if (!(c.intrinsics.fx > 0.0) || !(c.intrinsics.fy > 0.0))
      out.push_back({f + ".intrinsics", "positive_focal", "fx and fy must be > 0"});
    if (c.width <= 0 || c.height <= 0) out.push_back({f + ".image_size", "positive", "image size must be positive"});
    check_pose(c.extrinsic, f + ".extrinsic", out);
  }
  if (!state.rig.cameras.empty() && !state.rig.find(state.rig.reference_camera))
    out.push_back({"rig.reference_camera", "present", "reference camera '" + state.rig.reference_camera + "' not in rig"});

  std::map<std::string, int> vehicle_ids;
  for (std::size_t i = 0; i < state.vehicles.size(); ++i) {
    const auto& v = state.vehicles[i];
    const std::string f = "vehicles[" + std::to_string(i) + "]";
    if (++vehicle_ids[v.instance_id] == 2)
      out.push_back({f + ".instance_id", "unique", "duplicate instance id '" + v.instance_id + "'"});
    if (!std::isfinite(v.pose.x) || !std::isfinite(v.pose.y))
      out.push_back({f + ".pose", "finite", "vehicle position must be finite"});
    if (!(v.pose.heading > -kPi && v.pose.heading <= kPi))
      out.push_back({f + ".pose.heading", "range", "heading must lie in (-pi, pi]"});
    if (state.deleted_ids.count(v.instance_id))
      out.push_back({f + ".instance_id", "not_deleted", "vehicle '" + v.instance_id + "' is also in deleted_ids"});
    if (v.trajectory) check_trajectory(*v.trajectory, f + ".trajectory", out);
  }

  check_trajectory(state.ego, "ego_trajectory", out);
  check_pose(state.view_offset, "view_offset", out);

  if (state.skydome && !state.skydome->finite_nonnegative())
    out.push_back({"skydome", "finite_nonnegative", "skydome pixels must be finite and >= 0"});

  for (std::size_t i = 0; i < state.history.size(); ++i) {
    auto v = validate_edit_config(state.history[i], "history[" + std::to_string(i) + "]");
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

Pose6D ego_frame(const SceneState& state, double t) {
  const TrajectorySample s = state.ego.at(t);
  Pose6D p;
  p.rotation = Eigen::AngleAxisd(s.heading, Vec3::UnitZ()).toRotationMatrix();
  p.translation = Vec3(s.x, s.y, 0.0);
  return p;
}

}  // namespace roadscene
