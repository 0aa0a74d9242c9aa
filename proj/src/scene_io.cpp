#include "roadscene/scene_io.hpp"

#include <cmath>
#include <fstream>

#include "roadscene/equirect.hpp"
#include "roadscene/error.hpp"

namespace roadscene {
namespace {

using nlohmann::json;

json vec(const Vec2& v) { return {v.x(), v.y()}; }
json vec(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
json rgb(const Rgb& c) { return {c[0], c[1], c[2]}; }

Vec2 vec2_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
Vec3 vec3_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
Rgb rgb_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kSchemaViolation, where + ": " + what,
              {{"violations", json::array({{{"field", where}, {"rule", "type"}, {"message", what}}})}});
}

template <typename F>
auto guarded(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    schema_error(where, e.what());
  }
}

}  // namespace

json to_json(const Pose6D& p) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) r.push_back({p.rotation(i, 0), p.rotation(i, 1), p.rotation(i, 2)});
  return {{"rotation", r}, {"translation", vec(p.translation)}};
}

Pose6D pose_from_json(const json& j) {
  Pose6D p;
  if (j.contains("rotation")) {
    const json& r = j.at("rotation");
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) p.rotation(i, k) = r.at(i).at(k).get<double>();
  } else if (j.contains("ypr_deg")) {
    const Vec3 a = vec3_from(j.at("ypr_deg"));
    p.rotation = rotation_from_ypr(deg_to_rad(a.x()), deg_to_rad(a.y()), deg_to_rad(a.z()));
  }
  if (j.contains("translation")) p.translation = vec3_from(j.at("translation"));
  return p;
}

json to_json(const LaneMap& m) {
  json nodes = json::array();
  for (const auto& n : m.nodes)
    nodes.push_back({{"start", vec(n.start)}, {"end", vec(n.end)}, {"type", std::string(to_string(n.type))}});
  return {{"frame", m.frame}, {"nodes", nodes}};
}

LaneMap lane_map_from_json(const json& j) {
  return guarded("lane_map", [&] {
    LaneMap m;
    m.frame = j.value("frame", "ego");
    for (const auto& n : j.at("nodes")) {
      LaneNode node;
      node.start = vec2_from(n.at("start"));
      node.end = vec2_from(n.at("end"));
      const std::string t = n.value("type", "centerline");
      auto lt = lane_type_from_string(t);
      if (!lt) schema_error("lane_map.nodes.type", "unknown lane type '" + t + "'");
      node.type = *lt;
      m.nodes.push_back(node);
    }
    return m;
  });
}

json to_json(const CameraModel& c) {
  return {{"id", c.id},
          {"intrinsics", {{"fx", c.intrinsics.fx}, {"fy", c.intrinsics.fy}, {"cx", c.intrinsics.cx},
                          {"cy", c.intrinsics.cy}}},
          {"width", c.width},
          {"height", c.height},
          {"extrinsic", to_json(c.extrinsic)},
          {"exposure", c.exposure}};
}

CameraModel camera_from_json(const json& j) {
  return guarded("cameras", [&] {
    CameraModel c;
    c.id = j.at("id").get<std::string>();
    const json& in = j.at("intrinsics");
    c.intrinsics = {in.at("fx").get<double>(), in.at("fy").get<double>(), in.at("cx").get<double>(),
                    in.at("cy").get<double>()};
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.extrinsic = pose_from_json(j.at("extrinsic"));
    c.exposure = j.value("exposure", 0.01);
    return c;
  });
}

json to_json(const Trajectory& t) {
  json samples = json::array();
  for (const auto& s : t.samples) samples.push_back({s.t, s.x, s.y, s.heading});
  return {{"dt", t.dt}, {"samples", samples}};
}

Trajectory trajectory_from_json(const json& j) {
  return guarded("trajectory", [&] {
    Trajectory t;
    t.dt = j.at("dt").get<double>();
    for (const auto& s : j.at("samples"))
      t.samples.push_back({s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>(),
                           s.at(3).get<double>()});
    return t;
  });
}

json to_json(const PlacedVehicle& v) {
  return {{"instance_id", v.instance_id},
          {"asset_id", v.asset_id},
          {"pose", {{"x", v.pose.x}, {"y", v.pose.y}, {"heading", v.pose.heading}}},
          {"trajectory", v.trajectory ? to_json(*v.trajectory) : json(nullptr)},
          {"attributes", v.attributes}};
}

PlacedVehicle vehicle_from_json(const json& j) {
  return guarded("vehicles", [&] {
    PlacedVehicle v;
    v.instance_id = j.at("instance_id").get<std::string>();
    v.asset_id = j.value("asset_id", "");
    const json& p = j.at("pose");
    v.pose = {p.at("x").get<double>(), p.at("y").get<double>(), p.at("heading").get<double>()};
    if (j.contains("trajectory") && !j["trajectory"].is_null()) v.trajectory = trajectory_from_json(j["trajectory"]);
    if (j.contains("attributes")) v.attributes = j["attributes"];
    return v;
  });
}

json to_json(const SceneBox& b) {
  return {{"name", b.name},         {"min", vec(b.min)},          {"max", vec(b.max)},
          {"density", b.density},   {"radiance", rgb(b.radiance)}, {"label", b.label}};
}

SceneBox scene_box_from_json(const json& j) {
  return guarded("geometry", [&] {
    SceneBox b;
    b.name = j.value("name", "");
    b.min = vec3_from(j.at("min"));
    b.max = vec3_from(j.at("max"));
    b.density = j.at("density").get<double>();
    b.radiance = rgb_from(j.at("radiance"));
    b.label = j.value("label", 0);
    return b;
  });
}

EnvironmentMap procedural_sky(int h, int w, const Vec3& sun_dir, double sun_intensity) {
  if (h < 2 || w < 2) throw Error(ErrorCode::kInvalidArgument, "sky needs at least 2x2 pixels");
  const Vec3 sun = sun_dir.normalized();
  EnvironmentMap env(h, w);
  const Rgb zenith(0.25, 0.45, 0.9);
  const Rgb horizon(0.8, 0.85, 0.95);
  const Rgb ground(0.3, 0.3, 0.3);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Vec3 d = equirect_dir(r, c, h, w);
      Rgb v;
      if (d.z() >= 0.0) {
        const double s = std::sqrt(d.z());
        v = (1.0 - s) * horizon + s * zenith;
      } else {
        v = ground;
      }
      const double cosang = std::clamp(d.dot(sun), -1.0, 1.0);
      v += sun_intensity * std::exp(-std::pow(std::acos(cosang) / 0.06, 2.0)) * Rgb(1.0, 0.95, 0.85);
      env.pixels(r, c) = v;
    }
  return env;
}

json scene_to_json(const SceneState& s) {
  json j;
  j["lane_map"] = to_json(s.lane_map);
  json cams = json::array();
  for (const auto& c : s.rig.cameras) cams.push_back(to_json(c));
  j["cameras"] = cams;
  j["reference_camera"] = s.rig.reference_camera;
  json vehicles = json::array();
  for (const auto& v : s.vehicles) vehicles.push_back(to_json(v));
  j["vehicles"] = vehicles;
  j["deleted_ids"] = s.deleted_ids;
  if (!s.skydome_path.empty()) j["skydome_path"] = s.skydome_path;
  if (!s.sky_spec.is_null()) j["procedural_sky"] = s.sky_spec;
  json history = json::array();
  for (const auto& c : s.history) history.push_back(to_json(c));
  j["history"] = history;
  j["ego_trajectory"] = to_json(s.ego);
  json geometry = json::array();
  for (const auto& b : s.geometry) geometry.push_back(to_json(b));
  j["geometry"] = geometry;
  j["view_offset"] = to_json(s.view_offset);
  j["exposure_epsilon"] = s.exposure_epsilon;
  return j;
}

SceneState scene_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) schema_error("scene", "scene document must be an object");
  SceneState s;
  s.lane_map = lane_map_from_json(j.value("lane_map", json{{"nodes", json::array()}}));
  guarded("cameras", [&] {
    for (const auto& c : j.at("cameras")) s.rig.cameras.push_back(camera_from_json(c));
    s.rig.reference_camera = j.at("reference_camera").get<std::string>();
    return 0;
  });
  if (j.contains("vehicles"))
    for (const auto& v : j["vehicles"]) s.vehicles.push_back(vehicle_from_json(v));
  guarded("deleted_ids", [&] {
    if (j.contains("deleted_ids")) s.deleted_ids = j["deleted_ids"].get<std::set<std::string>>();
    return 0;
  });
  if (j.contains("history")) {
    std::size_t i = 0;
    for (const auto& c : j["history"]) {
      try {
        s.history.push_back(edit_config_from_json(c));
      } catch (const Error& e) {
        schema_error("history[" + std::to_string(i) + "]", e.what());
      }
      ++i;
    }
  }
  if (j.contains("ego_trajectory")) s.ego = trajectory_from_json(j["ego_trajectory"]);
  if (j.contains("geometry"))
    for (const auto& b : j["geometry"]) s.geometry.push_back(scene_box_from_json(b));
  if (j.contains("view_offset")) s.view_offset = guarded("view_offset", [&] { return pose_from_json(j["view_offset"]); });
  s.exposure_epsilon = guarded("exposure_epsilon", [&] { return j.value("exposure_epsilon", 0.5); });
  if (j.contains("skydome_path") && !j["skydome_path"].get<std::string>().empty()) {
    s.skydome_path = j["skydome_path"].get<std::string>();
    std::filesystem::path p = s.skydome_path;
    if (p.is_relative()) p = base_dir / p;
    s.skydome = EnvironmentMap(read_pfm_rgb(p));
  } else if (j.contains("procedural_sky")) {
    s.sky_spec = j["procedural_sky"];
    guarded("procedural_sky", [&] {
      const json& k = s.sky_spec;
      const double az = deg_to_rad(k.value("sun_azimuth_deg", 30.0));
      const double el = deg_to_rad(k.value("sun_elevation_deg", 40.0));
      const Vec3 sun(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      s.skydome = procedural_sky(k.value("height", 32), k.value("width", 64), sun, k.value("sun_intensity", 40.0));
      return 0;
    });
  }
  auto violations = validate_scene(s);
  if (!violations.empty()) {
    json list = json::array();
    for (const auto& v : violations) list.push_back({{"field", v.field}, {"rule", v.rule}, {"message", v.message}});
    throw Error(ErrorCode::kSchemaViolation,
                "scene violates " + std::to_string(violations.size()) + " invariant(s); first: " +
                    violations.front().field + ": " + violations.front().message,
                {{"violations", list}});
  }
  return s;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

SceneState load_scene(const std::filesystem::path& path) {
  return scene_from_json(read_json_file(path), path.parent_path().empty() ? "." : path.parent_path());
}

void save_scene(const SceneState& state, const std::filesystem::path& path) {
  SceneState s = state;
  if (s.skydome && s.skydome_path.empty() && s.sky_spec.is_null()) {
    const std::string name = path.stem().string() + "_sky.pfm";
    write_pfm(path.parent_path() / name, s.skydome->pixels);
    s.skydome_path = name;
  }
  write_json_file(path, scene_to_json(s));
}

}  // namespace roadscene
