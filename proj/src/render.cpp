#include "roadscene/render.hpp"

#include <cmath>
#include <limits>

#include "roadscene/asset_bank.hpp"
#include "roadscene/env_lighting.hpp"
#include "roadscene/error.hpp"
#include "roadscene/scene_io.hpp"

namespace roadscene {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kVehicleDensity = 20.0;
const Rgb kGroundRadiance(0.11, 0.11, 0.12);
constexpr std::uint16_t kVehicleLabelBase = 1000;

Pose6D ego_pose_clamped(const SceneState& s, double t) {
  const TrajectorySample e = s.ego.at_clamped(t);
  Pose6D p;
  p.rotation = rotation_from_ypr(e.heading, 0.0, 0.0);
  p.translation = Vec3(e.x, e.y, 0.0);
  return p;
}

double ground_hit(const Ray& ray) {
  if (ray.direction.z() >= -1e-12 || ray.origin.z() <= 0.0) return kInf;
  return -ray.origin.z() / ray.direction.z();
}

// Oriented vehicle box: footprint centered on (x, y), bottom at z = 0.
struct VehicleBox {
  Vec3 center = Vec3::Zero();  // bottom center
  double heading = 0.0;
  Vec3 half = Vec3::Zero();    // half length, half width, full height
  Rgb albedo = Rgb::Constant(0.5);
  std::size_t owner = 0;
};

struct BoxHit {
  double t = kInf;
  Vec3 normal_local = Vec3::Zero();
};

BoxHit intersect(const VehicleBox& b, const Ray& ray) {
  const double c = std::cos(b.heading), s = std::sin(b.heading);
  const Vec3 o = ray.origin - b.center;
  const Vec3 ol(c * o.x() + s * o.y(), -s * o.x() + c * o.y(), o.z());
  const Vec3 dl(c * ray.direction.x() + s * ray.direction.y(), -s * ray.direction.x() + c * ray.direction.y(),
                ray.direction.z());
  const Vec3 lo(-b.half.x(), -b.half.y(), 0.0);
  const Vec3 hi(b.half.x(), b.half.y(), b.half.z());
  double t0 = 0.0, t1 = kInf;
  int axis = -1;
  double sign = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dl[i]) < 1e-15) {
      if (ol[i] < lo[i] || ol[i] > hi[i]) return {};
      continue;
    }
    double ta = (lo[i] - ol[i]) / dl[i];
    double tb = (hi[i] - ol[i]) / dl[i];
    double sa = -1.0;
    if (ta > tb) {
      std::swap(ta, tb);
      sa = 1.0;
    }
    if (ta > t0) {
      t0 = ta;
      axis = i;
      sign = sa;
    }
    t1 = std::min(t1, tb);
    if (t0 > t1) return {};
  }
  if (axis < 0) return {};  // origin inside the box
  BoxHit h;
  h.t = t0;
  h.normal_local[axis] = sign;
  return h;
}

Vec3 to_world(const VehicleBox& b, const Vec3& n) {
  const double c = std::cos(b.heading), s = std::sin(b.heading);
  return {c * n.x() - s * n.y(), s * n.x() + c * n.y(), n.z()};
}

std::vector<FieldBox> background_boxes(const SceneState& state, double t) {
  std::vector<FieldBox> boxes;
  for (const auto& g : state.geometry) boxes.push_back({{g.min, g.max}, g.density, g.radiance, g.label});
  for (std::size_t i = 0; i < state.vehicles.size(); ++i) {
    const auto& v = state.vehicles[i];
    if (v.is_added() || state.deleted_ids.count(v.instance_id)) continue;
    const VehiclePose p = v.pose_at(t);
    const Vec3 d = vehicle_dimensions(v);
    const double c = std::abs(std::cos(p.heading)), s = std::abs(std::sin(p.heading));
    const double hx = 0.5 * (c * d.x() + s * d.y());
    const double hy = 0.5 * (s * d.x() + c * d.y());
    boxes.push_back({{Vec3(p.x - hx, p.y - hy, 0.0), Vec3(p.x + hx, p.y + hy, d.z())},
                     kVehicleDensity,
                     0.6 * inverse_oetf(vehicle_color(v)),
                     static_cast<std::uint16_t>(kVehicleLabelBase + i)});
  }
  return boxes;
}

double exposure_of(const SceneState& state) {
  const ExposureStats stats = ExposureStats::from_rig(state.rig, state.exposure_epsilon);
  return exposure_factor(state.rig.reference().exposure, stats);
}

// Nearest entry / farthest exit over the boxes the ray touches.
std::optional<std::pair<double, double>> span_of(const std::vector<FieldBox>& boxes, const Ray& ray) {
  double lo = kInf, hi = -kInf;
  for (const auto& b : boxes)
    if (auto iv = b.box.intersect(ray)) {
      lo = std::min(lo, iv->first);
      hi = std::max(hi, iv->second);
    }
  if (lo > hi) return std::nullopt;
  return std::make_pair(lo, hi);
}

}  // namespace

CameraModel render_camera(const SceneState& state, double t, const RenderSettings& settings) {
  if (settings.width < 1 || settings.height < 1)
    throw Error(ErrorCode::kInvalidArgument, "render size must be positive");
  CameraModel cam = state.rig.reference();
  const double sx = static_cast<double>(settings.width) / cam.width;
  const double sy = static_cast<double>(settings.height) / cam.height;
  cam.intrinsics = {cam.intrinsics.fx * sx, cam.intrinsics.fy * sy, cam.intrinsics.cx * sx, cam.intrinsics.cy * sy};
  cam.width = settings.width;
  cam.height = settings.height;
  cam.extrinsic = ego_pose_clamped(state, t).compose(state.view_offset.compose(cam.extrinsic));
  return cam;
}

Vec3 vehicle_dimensions(const PlacedVehicle& v) {
  const auto& a = v.attributes;
  if (a.contains("dimensions") && a["dimensions"].is_array() && a["dimensions"].size() == 3)
    return {a["dimensions"][0].get<double>(), a["dimensions"][1].get<double>(), a["dimensions"][2].get<double>()};
  return {4.5, 1.8, 1.5};
}

Rgb vehicle_color(const PlacedVehicle& v) {
  const auto& a = v.attributes;
  if (a.contains("color_rgb") && a["color_rgb"].is_array() && a["color_rgb"].size() == 3)
    return {a["color_rgb"][0].get<double>(), a["color_rgb"][1].get<double>(), a["color_rgb"][2].get<double>()};
  if (a.contains("color")) {
    const auto& c = a["color"];
    if (c.is_string())
      if (auto named = color_from_name(c.get<std::string>())) return *named;
    if (c.is_array() && c.size() == 3) return {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
  }
  return Rgb::Constant(0.5);
}

EnvironmentMap render_sky(const SceneState& state) {
  if (state.skydome) return *state.skydome;
  return procedural_sky(32, 64, Vec3(0.6, 0.35, 0.7));
}

std::vector<BackgroundFrame> render_background_frames(const SceneState& state, const RenderSettings& settings) {
  if (settings.frames < 0 || !(settings.fps > 0.0) || settings.samples < 1)
    throw Error(ErrorCode::kInvalidArgument, "bad render settings");
  const EnvironmentMap sky = render_sky(state);
  const double f = exposure_of(state);
  const int stride = std::max(1, settings.sparse_stride);
  std::vector<BackgroundFrame> out;
  for (int i = 0; i < settings.frames; ++i) {
    const double t = i / settings.fps;
    const CameraModel cam = render_camera(state, t, settings);
    const auto boxes = background_boxes(state, t);
    const CompositeBoxField field(boxes);
    BackgroundFrame bf{RgbImage(settings.height, settings.width), LabelImage(settings.height, settings.width, 0), {}};
    for (int r = 0; r < settings.height; ++r)
      for (int c = 0; c < settings.width; ++c) {
        const Ray ray = pixel_ray(cam, c + 0.5, r + 0.5);
        const double tg = ground_hit(ray);
        RenderResult res;
        if (!boxes.empty())
          if (auto span = span_of(boxes, ray); span && span->first < tg)
            res = render_ray_unit(ray, field, {settings.samples, span->first, std::min(span->second, tg)});
        const Rgb behind = std::isfinite(tg) ? kGroundRadiance : sky.sample(ray.direction);
        bf.hdr(r, c) = f * (res.hdr + res.transmittance * behind);
        double depth = kInf;
        if (res.opacity > 0.5) {
          depth = res.depth;
          bf.labels(r, c) = res.label;
        } else if (std::isfinite(tg)) {
          depth = tg;
        }
        if (r % stride == 0 && c % stride == 0 && std::isfinite(depth)) bf.sparse.push_back({r, c, depth});
      }
    out.push_back(std::move(bf));
  }
  return out;
}

std::vector<ForegroundLayer> render_foreground_frames(const SceneState& state, const RenderSettings& settings) {
  if (settings.frames < 0 || !(settings.fps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "bad render settings");
  const EnvironmentMap sky = render_sky(state);
  const double f = exposure_of(state);
  const RaySampling probe_sampling{std::max(8, settings.samples / 2), 0.0, 200.0};

  // Ground shading split into total and sun-only irradiance for the shadow catcher.
  const Vec3 sun = sky.brightest_direction();
  EnvironmentMap sun_only(sky.height(), sky.width());
  double peak = 0.0;
  for (const auto& p : sky.pixels.pixels()) peak = std::max(peak, p.sum());
  for (int r = 0; r < sky.height(); ++r)
    for (int c = 0; c < sky.width(); ++c)
      if (sky.pixels(r, c).sum() >= 0.1 * peak) sun_only.pixels(r, c) = sky.pixels(r, c);
  const auto e_total = irradiance({Vec3::UnitZ()}, sky).front();
  const auto e_sun = irradiance({Vec3::UnitZ()}, sun_only).front();
  Rgb shadow_factor = Rgb::Ones();
  for (int k = 0; k < 3; ++k)
    shadow_factor[k] = e_total[k] > 0.0 ? std::clamp((e_total[k] - e_sun[k]) / e_total[k], 0.0, 1.0) : 1.0;
  const bool sun_up = sun.z() > 0.05;

  std::vector<ForegroundLayer> out;
  for (int i = 0; i < settings.frames; ++i) {
    const double t = i / settings.fps;
    const CameraModel cam = render_camera(state, t, settings);
    const auto bg_boxes = background_boxes(state, t);
    const CompositeBoxField field(bg_boxes, 1.0);

    std::vector<VehicleBox> boxes;
    std::vector<std::vector<Rgb>> face_irradiance;  // per box: +x, -x, +y, -y, +z, -z (local)
    for (std::size_t k = 0; k < state.vehicles.size(); ++k) {
      const auto& v = state.vehicles[k];
      if (!v.is_added() || state.deleted_ids.count(v.instance_id)) continue;
      const VehiclePose p = v.pose_at(t);
      const Vec3 d = vehicle_dimensions(v);
      VehicleBox b{Vec3(p.x, p.y, 0.0), p.heading, Vec3(0.5 * d.x(), 0.5 * d.y(), d.z()),
                   inverse_oetf(vehicle_color(v)), k};
      const LightingProbe probe =
          capture_surround(Vec3(p.x, p.y, 0.5 * d.z()), field, probe_sampling, settings.probe_height,
                           settings.probe_width);
      const EnvironmentMap env = blend_environment(probe, sky);
      std::vector<Vec3> normals;
      for (const Vec3& n : {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0), Vec3(0, 0, 1),
                            Vec3(0, 0, -1)})
        normals.push_back(to_world(b, n));
      face_irradiance.push_back(irradiance(normals, env));
      boxes.push_back(b);
    }

    ForegroundLayer layer = ForegroundLayer::empty(settings.height, settings.width);
    if (boxes.empty()) {
      out.push_back(std::move(layer));
      continue;
    }
    for (int r = 0; r < settings.height; ++r)
      for (int c = 0; c < settings.width; ++c) {
        const Ray ray = pixel_ray(cam, c + 0.5, r + 0.5);
        BoxHit best;
        std::size_t which = 0;
        for (std::size_t k = 0; k < boxes.size(); ++k) {
          const BoxHit h = intersect(boxes[k], ray);
          if (h.t < best.t) {
            best = h;
            which = k;
          }
        }
        if (std::isfinite(best.t)) {
          const Vec3& n = best.normal_local;
          const int face = n.x() > 0 ? 0 : n.x() < 0 ? 1 : n.y() > 0 ? 2 : n.y() < 0 ? 3 : n.z() > 0 ? 4 : 5;
          layer.rgb(r, c) = f * boxes[which].albedo / kPi * face_irradiance[which][face];
          layer.alpha(r, c) = 1.0;
          layer.depth(r, c) = best.t;
          continue;
        }
        if (!sun_up) continue;
        const double tg = ground_hit(ray);
        if (!std::isfinite(tg)) continue;
        if (auto span = span_of(bg_boxes, ray); span && span->first < tg) continue;
        const Ray shadow_ray{ray.at(tg) + Vec3(0, 0, 1e-3), sun};
        for (const auto& b : boxes)
          if (std::isfinite(intersect(b, shadow_ray).t)) {
            layer.shadow(r, c) = shadow_factor;
            break;
          }
      }
    out.push_back(std::move(layer));
  }
  return out;
}

std::vector<Rgb8Image> compose_frames(const std::vector<BackgroundFrame>& bg, const std::vector<ForegroundLayer>& fg) {
  if (bg.size() != fg.size())
    throw Error(ErrorCode::kShapeMismatch, "background and foreground frame counts differ");
  std::vector<Rgb8Image> out;
  for (std::size_t i = 0; i < bg.size(); ++i) {
    const RgbImage rgb = composite(fg[i], bg[i].hdr, {bg[i].sparse, bg[i].labels});
    Rgb8Image frame(rgb.height(), rgb.width());
    for (int r = 0; r < rgb.height(); ++r)
      for (int c = 0; c < rgb.width(); ++c) frame(r, c) = encode_srgb8(rgb(r, c));
    out.push_back(std::move(frame));
  }
  return out;
}

std::vector<Rgb8Image> render_video(const SceneState& state, const RenderSettings& settings) {
  return compose_frames(render_background_frames(state, settings), render_foreground_frames(state, settings));
}

}  // namespace roadscene
