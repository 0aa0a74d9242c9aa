#include "roadscene/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <mutex>
#include <regex>
#include <set>

#include "roadscene/camera_geometry.hpp"
#include "roadscene/error.hpp"
#include "roadscene/scene_io.hpp"

namespace roadscene {
namespace {

using nlohmann::json;

const std::pair<AgentRole, AgentRole> kEdges[] = {
    {AgentRole::kViewAdjust, AgentRole::kBackgroundRender},
    {AgentRole::kViewAdjust, AgentRole::kForegroundRender},
    {AgentRole::kVehicleDelete, AgentRole::kBackgroundRender},
    {AgentRole::kVehicleDelete, AgentRole::kVehicleMotion},
    {AgentRole::kVehicleDelete, AgentRole::kForegroundRender},
    {AgentRole::kAssetManage, AgentRole::kVehicleMotion},
    {AgentRole::kAssetManage, AgentRole::kForegroundRender},
    {AgentRole::kVehicleMotion, AgentRole::kForegroundRender},
};

bool is_render(AgentRole r) { return r == AgentRole::kBackgroundRender || r == AgentRole::kForegroundRender; }

std::size_t instance_ordinal(const std::string& id) {
  const auto pos = id.rfind('_');
  return pos == std::string::npos ? 0 : std::stoul(id.substr(pos + 1));
}

Rgb color_or_throw(const std::string& name) {
  auto c = color_from_name(name);
  if (!c) throw Error(ErrorCode::kInvalidArgument, "unknown color '" + name + "'", {{"color", name}});
  return *c;
}

std::vector<Occupancy> occupancy_of(const SceneState& s, const std::set<std::string>& skip, double margin) {
  std::vector<Occupancy> out;
  for (const auto& v : s.vehicles) {
    if (skip.count(v.instance_id) || s.deleted_ids.count(v.instance_id)) continue;
    const VehiclePose p = v.pose_at(0.0);
    out.push_back({Vec2(p.x, p.y), 0.5 * vehicle_dimensions(v).x() + margin});
  }
  return out;
}

}  // namespace

std::string_view to_string(AgentRole r) {
  switch (r) {
    case AgentRole::kProjectManager: return "project_manager";
    case AgentRole::kViewAdjust: return "view_adjust";
    case AgentRole::kVehicleDelete: return "vehicle_delete";
    case AgentRole::kAssetManage: return "asset_manage";
    case AgentRole::kVehicleMotion: return "vehicle_motion";
    case AgentRole::kBackgroundRender: return "background_render";
    case AgentRole::kForegroundRender: return "foreground_render";
  }
  return "unknown";
}

std::vector<AgentRole> WorkOrder::roles() const {
  std::vector<AgentRole> out;
  for (const auto& [r, idx] : assignments) out.push_back(r);
  return out;
}

std::vector<AgentRole> WorkOrder::execution_order() const {
  std::map<AgentRole, int> indegree;
  for (const auto& [r, idx] : assignments) indegree[r] = 0;
  for (const auto& [a, b] : edges) {
    if (!has_role(a) || !has_role(b))
      throw Error(ErrorCode::kInvalidArgument, "edge references a role without work",
                  {{"from", std::string(to_string(a))}, {"to", std::string(to_string(b))}});
    ++indegree[b];
  }
  std::vector<AgentRole> out;
  std::set<AgentRole> ready;
  for (const auto& [r, d] : indegree)
    if (d == 0) ready.insert(r);
  while (!ready.empty()) {
    const AgentRole r = *ready.begin();
    ready.erase(ready.begin());
    out.push_back(r);
    for (const auto& [a, b] : edges)
      if (a == r && --indegree[b] == 0) ready.insert(b);
  }
  if (out.size() != assignments.size()) throw Error(ErrorCode::kInvalidArgument, "role graph has a cycle");
  return out;
}

json WorkOrder::to_json() const {
  json j;
  json cfg = json::array();
  for (const auto& c : configs) cfg.push_back(roadscene::to_json(c));
  j["configs"] = cfg;
  json roles = json::object();
  for (const auto& [r, idx] : assignments) roles[std::string(to_string(r))] = idx;
  j["roles"] = roles;
  json e = json::array();
  for (const auto& [a, b] : edges) e.push_back({std::string(to_string(a)), std::string(to_string(b))});
  j["edges"] = e;
  json order = json::array();
  for (AgentRole r : execution_order()) order.push_back(std::string(to_string(r)));
  j["order"] = order;
  j["warnings"] = warnings;
  return j;
}

std::vector<EditConfig> expand_abstract(const EditConfig& config, const SceneState& state,
                                        const AbstractPolicy& policy) {
  const std::string phrase = config.parameters.value(param::kPhrase, "");
  static const std::regex jam("\\b(?:traffic\\s+jam|jam|congestion|heavy\\s+traffic|gridlock|rush\\s+hour)\\b");
  if (!std::regex_search(phrase, jam))
    throw Error(ErrorCode::kUnsupportedAbstraction, "no expansion known for '" + phrase + "'",
                {{"phrase", phrase}, {"supported", {"traffic jam"}}});
  const std::size_t limit =
      config.parameters.contains(param::kCount) ? config.parameters[param::kCount].get<std::size_t>() : SIZE_MAX;

  struct Slot {
    double x, y;
  };
  std::vector<Slot> nodes;
  for (const auto& n : state.lane_map.nodes) {
    if (n.type != LaneType::kCenterline) continue;
    const Vec2 m = n.midpoint();
    if (n.direction().x() <= 0.9 || m.x() < policy.x_min || m.x() > policy.x_max) continue;
    nodes.push_back({m.x(), m.y()});
  }
  std::sort(nodes.begin(), nodes.end(), [](const Slot& a, const Slot& b) { return a.y < b.y || (a.y == b.y && a.x < b.x); });
  std::vector<std::vector<Slot>> lanes;
  double lane_y = 0.0;
  for (const auto& s : nodes) {
    if (lanes.empty() || s.y - lane_y > policy.lateral_tolerance) {
      lanes.emplace_back();
      lane_y = s.y;
    }
    lanes.back().push_back(s);
  }
  auto mean_y = [](const std::vector<Slot>& lane) {
    double y = 0.0;
    for (const auto& s : lane) y += s.y;
    return y / lane.size();
  };
  std::stable_sort(lanes.begin(), lanes.end(), [&](const auto& a, const auto& b) {
    const double ya = mean_y(a), yb = mean_y(b);
    return std::abs(ya) < std::abs(yb) || (std::abs(ya) == std::abs(yb) && ya > yb);
  });

  const auto occupied = occupancy_of(state, {}, policy.occupancy_margin);
  std::vector<EditConfig> out;
  for (auto& lane : lanes) {
    std::sort(lane.begin(), lane.end(), [](const Slot& a, const Slot& b) { return a.x < b.x; });
    std::optional<double> last;
    for (const auto& s : lane) {
      if (out.size() >= limit) return out;
      if (last && s.x - *last < policy.spacing) continue;
      const bool taken = std::any_of(occupied.begin(), occupied.end(), [&](const Occupancy& o) {
        return (Vec2(s.x, s.y) - o.center).norm() < o.radius;
      });
      if (taken) continue;
      EditConfig c;
      c.action = EditAction::kAdd;
      c.round = config.round;
      c.parameters = {{param::kType, "car"}, {param::kCount, 1}, {param::kSpeed, policy.speed},
                      {param::kAnchorX, s.x}, {param::kAnchorY, s.y}};
      out.push_back(std::move(c));
      last = s.x;
    }
  }
  return out;
}

std::uint64_t round_seed(std::uint64_t seed, int round, std::size_t index) {
  return mix_seed(mix_seed(seed, static_cast<std::uint64_t>(round)), index);
}

WorkOrder plan_round(const SceneState& state, const std::vector<EditConfig>& configs, int round,
                     const AssetBank& bank, const SessionOptions& options) {
  WorkOrder wo;
  SceneState view;  // history + live vehicles as seen by reference resolution
  view.history = state.history;
  view.vehicles = state.vehicles;
  view.deleted_ids = state.deleted_ids;
  view.lane_map = state.lane_map;
  int next_instance = 0;

  auto live_vehicles = [&] {
    std::vector<const PlacedVehicle*> out;
    for (const auto& v : view.vehicles)
      if (!view.deleted_ids.count(v.instance_id)) out.push_back(&v);
    return out;
  };

  auto plan_add = [&](EditConfig c) {
    json& p = c.parameters;
    const int n = p.value(param::kCount, 1);
    if (n < 1) throw Error(ErrorCode::kInvalidArgument, "count must be at least 1");
    AssetRequest req;
    if (p.contains(param::kType)) req.type = p[param::kType].get<std::string>();
    if (p.contains(param::kColor)) req.color = color_or_throw(p[param::kColor].get<std::string>());
    const AssetMatch match = match_asset(req, bank.records());
    if (p.contains(param::kReference)) p[param::kReferenceId] = resolve_reference(p[param::kReference].get<std::string>(), view);
    json ids = json::array(), assets = json::array(), types = json::array();
    for (int i = 0; i < n; ++i) {
      ids.push_back("v" + std::to_string(round) + "_" + std::to_string(++next_instance));
      assets.push_back(match.record.id);
      types.push_back(match.record.type);
    }
    p[param::kInstanceIds] = ids;
    p[param::kAssetIds] = assets;
    p[param::kAssetTypes] = types;
    view.history.push_back(c);
    wo.configs.push_back(std::move(c));
  };

  for (EditConfig c : configs) {
    c.round = round;
    json& p = c.parameters;
    switch (c.action) {
      case EditAction::kAdd:
        plan_add(std::move(c));
        break;
      case EditAction::kAbstractExpand: {
        SceneState occ = view;
        auto expanded = expand_abstract(c, occ, options.abstraction);
        if (expanded.empty())
          wo.warnings.push_back("'" + p.value(param::kPhrase, std::string()) + "' found no free lane slot");
        for (auto& e : expanded) plan_add(std::move(e));
        break;
      }
      case EditAction::kDelete: {
        json targets = json::array();
        if (p.contains(param::kReference)) {
          targets.push_back(resolve_reference(p[param::kReference].get<std::string>(), view));
        } else {
          std::optional<std::string> type, color;
          if (p.contains(param::kType)) type = p[param::kType].get<std::string>();
          if (p.contains(param::kColor)) color = p[param::kColor].get<std::string>();
          std::optional<Sector> sector;
          if (p.contains(param::kSector)) sector = sector_from_string(p[param::kSector].get<std::string>());
          std::vector<const PlacedVehicle*> hits;
          json candidates = json::array();
          for (const PlacedVehicle* v : live_vehicles()) {
            candidates.push_back(v->instance_id);
            if (!vehicle_matches(*v, type, color)) continue;
            const VehiclePose pose = v->pose_at(0.0);
            if (sector && (std::hypot(pose.x, pose.y) == 0.0 || classify_sector({pose.x, pose.y}) != *sector))
              continue;
            hits.push_back(v);
          }
          if (hits.empty() && p.value(param::kScope, "match") != "all")
            throw Error(ErrorCode::kUnresolvedReference,
                        "no vehicle matches '" + c.target.value_or("delete") + "'",
                        {{"reference", c.target.value_or("")}, {"candidates", candidates}});
          if (p.value(param::kScope, "match") == "all") {
            for (const auto* v : hits) targets.push_back(v->instance_id);
          } else {
            const auto* best = *std::min_element(hits.begin(), hits.end(), [](const auto* a, const auto* b) {
              const VehiclePose pa = a->pose_at(0.0), pb = b->pose_at(0.0);
              return std::hypot(pa.x, pa.y) < std::hypot(pb.x, pb.y);
            });
            targets.push_back(best->instance_id);
          }
        }
        p[param::kTargetIds] = targets;
        for (const auto& id : targets) view.deleted_ids.insert(id.get<std::string>());
        view.history.push_back(c);
        wo.configs.push_back(std::move(c));
        break;
      }
      case EditAction::kRevise: {
        if (!p.contains(param::kReference) && !p.contains(param::kTargetIds))
          throw Error(ErrorCode::kUnresolvedReference, "revise needs a vehicle reference");
        if (!p.contains(param::kTargetIds))
          p[param::kTargetIds] = json::array({resolve_reference(p[param::kReference].get<std::string>(), view)});
        if (p.contains(param::kType)) {
          AssetRequest req;
          req.type = p[param::kType].get<std::string>();
          if (p.contains(param::kColor)) req.color = color_or_throw(p[param::kColor].get<std::string>());
          const AssetMatch match = match_asset(req, bank.records());
          p[param::kAssetIds] = json::array({match.record.id});
          p[param::kAssetTypes] = json::array({match.record.type});
        } else if (p.contains(param::kColor)) {
          color_or_throw(p[param::kColor].get<std::string>());
        }
        view.history.push_back(c);
        wo.configs.push_back(std::move(c));
        break;
      }
      case EditAction::kViewChange:
        view.history.push_back(c);
        wo.configs.push_back(std::move(c));
        break;
    }
  }

  for (std::size_t i = 0; i < wo.configs.size(); ++i) {
    const EditConfig& c = wo.configs[i];
    switch (c.action) {
      case EditAction::kAdd:
        wo.assignments[AgentRole::kAssetManage].push_back(i);
        wo.assignments[AgentRole::kVehicleMotion].push_back(i);
        break;
      case EditAction::kDelete:
        wo.assignments[AgentRole::kVehicleDelete].push_back(i);
        break;
      case EditAction::kRevise:
        if (c.parameters.contains(param::kType) || c.parameters.contains(param::kColor))
          wo.assignments[AgentRole::kAssetManage].push_back(i);
        if (has_motion_change(c)) wo.assignments[AgentRole::kVehicleMotion].push_back(i);
        break;
      case EditAction::kViewChange:
        wo.assignments[AgentRole::kViewAdjust].push_back(i);
        break;
      case EditAction::kAbstractExpand:
        break;
    }
  }
  if (!wo.configs.empty()) {
    wo.assignments[AgentRole::kBackgroundRender];
    wo.assignments[AgentRole::kForegroundRender];
  }
  for (const auto& e : kEdges)
    if (wo.has_role(e.first) && wo.has_role(e.second)) wo.edges.push_back(e);
  return wo;
}

Session::Session(SceneState initial, AssetBank bank, SessionOptions options)
    : initial_(initial), state_(std::move(initial)), bank_(std::move(bank)), options_(std::move(options)) {}

WorkOrder Session::plan(const std::string& text) const { return plan(text, options_.backend); }

WorkOrder Session::plan(const std::string& text, const InterpreterBackend& backend) const {
  const int round = rounds() + 1;
  const auto configs = interpret({text, round}, backend);
  return plan_round(state_, configs, round, bank_, options_);
}

namespace {

struct RoleFailure {
  AgentRole role;
  std::size_t index;
};

void adjust_view(SceneState& s, const EditConfig& c, const SessionOptions& o) {
  const json& p = c.parameters;
  if (p.contains(param::kEgoSpeed)) {
    const double v = p[param::kEgoSpeed].get<double>();
    const double duration = std::max(s.ego.end_time(), (o.render.frames - 1) / o.render.fps);
    s.ego = straight_trajectory(0.0, 0.0, 0.0, v, duration, 0.1);
  }
  ViewDelta d;
  d.translation = Vec3(p.value(param::kForward, 0.0), p.value(param::kLeft, 0.0), p.value(param::kUp, 0.0));
  d.yaw = deg_to_rad(p.value(param::kYawDeg, 0.0));
  d.pitch = deg_to_rad(p.value(param::kPitchDeg, 0.0));
  d.roll = deg_to_rad(p.value(param::kRollDeg, 0.0));
  s.view_offset = apply_view_delta(s.view_offset, d);
}

void delete_vehicles(SceneState& s, const EditConfig& c) {
  for (const auto& idj : c.parameters.at(param::kTargetIds)) {
    const std::string id = idj.get<std::string>();
    auto it = std::find_if(s.vehicles.begin(), s.vehicles.end(), [&](const auto& v) { return v.instance_id == id; });
    if (it == s.vehicles.end())
      throw Error(ErrorCode::kUnresolvedReference, "vehicle '" + id + "' is not in the scene", {{"id", id}});
    s.vehicles.erase(it);
    s.deleted_ids.insert(id);
  }
}

void set_asset(PlacedVehicle& v, const AssetRecord& rec, const std::optional<std::string>& color_name) {
  AssetRecord r = rec;
  std::string name = nearest_color_name(rec.color);
  if (color_name) {
    const Rgb want = color_or_throw(*color_name);
    if ((rec.color - want).matrix().norm() > kColorTolerance) r = recolor(rec, want);
    name = *color_name;
  }
  v.asset_id = r.id;
  v.attributes["type"] = r.type;
  v.attributes["color"] = name;
  v.attributes["color_rgb"] = {r.color[0], r.color[1], r.color[2]};
  v.attributes["dimensions"] = {r.dimensions.x(), r.dimensions.y(), r.dimensions.z()};
  v.attributes["asset_path"] = r.path;
}

void manage_assets(SceneState& s, const EditConfig& c, const AssetBank& bank) {
  const json& p = c.parameters;
  std::optional<std::string> color;
  if (p.contains(param::kColor)) color = p[param::kColor].get<std::string>();
  if (c.action == EditAction::kAdd) {
    const auto& ids = p.at(param::kInstanceIds);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      PlacedVehicle v;
      v.instance_id = ids[i].get<std::string>();
      v.attributes["origin"] = "added";
      v.attributes["round"] = c.round;
      if (p.contains(param::kType)) v.attributes["requested_type"] = p[param::kType];
      set_asset(v, bank.at(p.at(param::kAssetIds)[i].get<std::string>()), color);
      s.vehicles.push_back(std::move(v));
    }
    return;
  }
  for (const auto& idj : p.at(param::kTargetIds)) {
    PlacedVehicle* v = s.find_vehicle(idj.get<std::string>());
    if (!v) throw Error(ErrorCode::kUnresolvedReference, "vehicle '" + idj.get<std::string>() + "' is not in the scene");
    if (p.contains(param::kAssetIds)) {
      if (!color && v->attributes.contains("color") && v->attributes["color"].is_string())
        color = v->attributes["color"].get<std::string>();
      set_asset(*v, bank.at(p[param::kAssetIds][0].get<std::string>()), color);
    } else if (color) {
      const AssetRecord* rec = bank.find(v->asset_id);
      AssetRecord base;
      if (rec) base = *rec;
      else {
        base.id = v->asset_id;
        base.type = v->attributes.value("type", "car");
        const Vec3 d = vehicle_dimensions(*v);
        base.dimensions = d;
      }
      set_asset(*v, base, color);
    }
  }
}

double reference_speed(const PlacedVehicle& ref, double fallback) {
  if (ref.attributes.contains("motion")) return ref.attributes["motion"].value("speed", fallback);
  if (ref.trajectory && ref.trajectory->samples.size() >= 2) return mean_speed(*ref.trajectory);
  return fallback;
}

void move_vehicles(SceneState& s, const EditConfig& c, std::size_t config_index, const SessionOptions& o,
                   std::set<std::string>& unplaced) {
  const json& p = c.parameters;
  const MotionSettings& ms = o.motion;
  if (c.action == EditAction::kAdd) {
    for (const auto& idj : p.at(param::kInstanceIds)) {
      const std::string id = idj.get<std::string>();
      PlacedVehicle* v = s.find_vehicle(id);
      if (!v) throw Error(ErrorCode::kInvalidArgument, "vehicle '" + id + "' was not materialized");
      MotionAttributes a = extract_motion_attributes(c, o.lexicon);
      const std::uint64_t seed = round_seed(o.seed, c.round, instance_ordinal(id));
      PlacementQuery q;
      q.seed = seed;
      std::set<std::string> skip = unplaced;
      skip.insert(id);
      q.occupied = occupancy_of(s, skip, ms.occupancy_margin);
      VehiclePose start;
      if (p.contains(param::kAnchorX) && p.contains(param::kAnchorY)) {
        const Vec2 anchor(p[param::kAnchorX].get<double>(), p[param::kAnchorY].get<double>());
        std::size_t best = s.lane_map.nodes.size();
        double best_d = 0.0;
        for (std::size_t i = 0; i < s.lane_map.nodes.size(); ++i) {
          const auto& n = s.lane_map.nodes[i];
          if (n.type != LaneType::kCenterline) continue;
          const double d = (n.midpoint() - anchor).norm();
          if (best == s.lane_map.nodes.size() || d < best_d) {
            best = i;
            best_d = d;
          }
        }
        if (best == s.lane_map.nodes.size())
          throw Error(ErrorCode::kNoFeasiblePlacement, "lane map has no centerline for the anchor");
        const auto& n = s.lane_map.nodes[best];
        start = {n.midpoint().x(), n.midpoint().y(), wrap_angle(n.heading())};
      } else if (a.relation) {
        a.reference_id = p.at(param::kReferenceId).get<std::string>();
        const PlacedVehicle* ref = s.find_vehicle(a.reference_id);
        if (!ref || unplaced.count(a.reference_id))
          throw Error(ErrorCode::kUnresolvedReference, "reference vehicle '" + a.reference_id + "' is not placed");
        q.reference = ref->pose_at(0.0);
        if (a.chase && !sets_speed(c)) a.speed = reference_speed(*ref, a.speed);
        q.attributes = a;
        const Placement pl = place_vehicle(q, s.lane_map, Pose6D::identity(), ms);
        start = {pl.position.x(), pl.position.y(), pl.heading};
      } else {
        q.attributes = a;
        const Placement pl = place_vehicle(q, crop_map(s.lane_map, Pose6D::identity(), ms), Pose6D::identity(), ms);
        start = {pl.position.x(), pl.position.y(), pl.heading};
      }
      const MotionPlan plan = plan_motion(start, a, s.lane_map, seed, ms);
      v->pose = start;
      v->trajectory = plan.trajectory;
      v->attributes["motion"] = to_json(a);
      unplaced.erase(id);
    }
    return;
  }
  for (const auto& idj : p.at(param::kTargetIds)) {
    const std::string id = idj.get<std::string>();
    PlacedVehicle* v = s.find_vehicle(id);
    if (!v) throw Error(ErrorCode::kUnresolvedReference, "vehicle '" + id + "' is not in the scene", {{"id", id}});
    MotionAttributes base;
    if (v->attributes.contains("motion")) base = motion_attributes_from_json(v->attributes["motion"]);
    else if (v->trajectory) base.speed = mean_speed(*v->trajectory);
    const MotionAttributes a = merge_motion_attributes(base, c, o.lexicon);
    const std::uint64_t seed = round_seed(o.seed, c.round, 1000 + config_index);
    const MotionPlan plan = plan_motion(v->pose, a, s.lane_map, seed, ms);
    v->trajectory = plan.trajectory;
    v->attributes["motion"] = to_json(a);
  }
}

}  // namespace

RoundResult Session::execute(const WorkOrder& order) {
  RoundResult rr;
  rr.warnings = order.warnings;
  if (order.empty()) {
    rr.summary = {{"round", rounds()}, {"configs", json::array()}, {"frames", 0}};
    return rr;
  }
  const std::vector<AgentRole> sequence = order.execution_order();
  SceneState staging = state_;
  std::mutex trace_mutex;
  auto log = [&](AgentRole r, const char* phase) {
    std::lock_guard<std::mutex> lock(trace_mutex);
    rr.trace.push_back({r, phase});
  };
  auto fail = [&](AgentRole r, std::optional<std::size_t> index, const std::string& what, const json& cause) {
    json detail = {{"role", std::string(to_string(r))}, {"cause", cause}};
    std::string where;
    if (index) {
      detail["config_index"] = *index;
      detail["config"] = to_json(order.configs[*index]);
      where = " on config " + std::to_string(*index) + " (" + std::string(to_string(order.configs[*index].action)) + ")";
    }
    throw Error(ErrorCode::kRoundFailed, "role '" + std::string(to_string(r)) + "' failed" + where + ": " + what,
                detail);
  };
  auto run_role = [&](AgentRole r, const std::function<void(std::optional<std::size_t>&)>& body) {
    log(r, "start");
    std::optional<std::size_t> current;
    try {
      if (before_role) before_role(r);
      body(current);
    } catch (const Error& e) {
      fail(r, current, e.what(), e.to_json());
    } catch (const std::exception& e) {
      fail(r, current, e.what(), {{"message", e.what()}});
    }
    log(r, "end");
  };

  std::set<std::string> unplaced;
  for (AgentRole r : sequence) {
    if (is_render(r)) continue;
    const auto& indices = order.assignments.at(r);
    run_role(r, [&](std::optional<std::size_t>& current) {
      for (std::size_t i : indices) {
        current = i;
        const EditConfig& c = order.configs[i];
        switch (r) {
          case AgentRole::kViewAdjust: adjust_view(staging, c, options_); break;
          case AgentRole::kVehicleDelete: delete_vehicles(staging, c); break;
          case AgentRole::kAssetManage:
            manage_assets(staging, c, bank_);
            if (c.action == EditAction::kAdd)
              for (const auto& id : c.parameters.at(param::kInstanceIds)) unplaced.insert(id.get<std::string>());
            break;
          case AgentRole::kVehicleMotion: move_vehicles(staging, c, i, options_, unplaced); break;
          default: break;
        }
      }
    });
  }
  if (!unplaced.empty())
    fail(AgentRole::kVehicleMotion, std::nullopt, "vehicles left without placement", {{"ids", unplaced}});

  staging.history.insert(staging.history.end(), order.configs.begin(), order.configs.end());
  auto violations = validate_scene(staging);
  if (!violations.empty()) {
    json list = json::array();
    for (const auto& v : violations) list.push_back({{"field", v.field}, {"message", v.message}});
    fail(AgentRole::kProjectManager, std::nullopt, "edited scene violates invariants", {{"violations", list}});
  }

  if (options_.render_frames) {
    std::vector<BackgroundFrame> bg;
    std::vector<ForegroundLayer> fg;
    const RenderSettings settings = options_.render;
    auto bg_job = std::async(std::launch::async, [&] {
      run_role(AgentRole::kBackgroundRender,
               [&](std::optional<std::size_t>&) { bg = render_background_frames(staging, settings); });
    });
    auto fg_job = std::async(std::launch::async, [&] {
      run_role(AgentRole::kForegroundRender,
               [&](std::optional<std::size_t>&) { fg = render_foreground_frames(staging, settings); });
    });
    std::exception_ptr first;
    for (auto* job : {&bg_job, &fg_job}) {
      try {
        job->get();
      } catch (...) {
        if (!first) first = std::current_exception();
      }
    }
    if (first) std::rethrow_exception(first);
    rr.frames = compose_frames(bg, fg);
  } else {
    for (AgentRole r : sequence)
      if (is_render(r)) run_role(r, [](std::optional<std::size_t>&) {});
  }

  json cfg = json::array();
  for (const auto& c : order.configs) cfg.push_back(to_json(c));
  json roles = json::array();
  for (AgentRole r : sequence) roles.push_back(std::string(to_string(r)));
  state_ = std::move(staging);
  frames_ = rr.frames;
  rr.summary = {{"round", order.configs.front().round},
                {"configs", cfg},
                {"roles", roles},
                {"vehicles", state_.vehicles.size()},
                {"deleted_ids", state_.deleted_ids},
                {"frames", rr.frames.size()},
                {"warnings", rr.warnings}};
  return rr;
}

RoundResult Session::run(const std::string& text) { return run(text, options_.backend); }

RoundResult Session::run(const std::string& text, const InterpreterBackend& backend) {
  const WorkOrder order = plan(text, backend);
  RoundResult rr = execute(order);
  commands_.push_back(text);
  return rr;
}

json export_placements(const SceneState& state) {
  json vehicles = json::array();
  for (const auto& v : state.vehicles) vehicles.push_back(to_json(v));
  json cameras = json::array();
  for (const auto& c : state.rig.cameras) {
    json cj = to_json(c);
    cj["extrinsic"] = to_json(state.view_offset.compose(c.extrinsic));
    cameras.push_back(cj);
  }
  json assets = json::array();
  for (const auto& v : state.vehicles) {
    if (v.asset_id.empty()) continue;
    assets.push_back({{"instance_id", v.instance_id},
                      {"asset_id", v.asset_id},
                      {"path", v.attributes.value("asset_path", "")},
                      {"pose", {{"x", v.pose.x}, {"y", v.pose.y}, {"heading", v.pose.heading}}},
                      {"color", v.attributes.value("color_rgb", json::array())}});
  }
  json environment = json::object();
  if (!state.skydome_path.empty()) environment["skydome_path"] = state.skydome_path;
  if (!state.sky_spec.is_null()) environment["procedural_sky"] = state.sky_spec;
  const Vec3 ypr = ypr_from_rotation(state.view_offset.rotation);
  return {{"vehicles", vehicles},
          {"cameras", cameras},
          {"assets", assets},
          {"environment", environment},
          {"deleted_ids", state.deleted_ids},
          {"ego_trajectory", to_json(state.ego)},
          {"view_offset", to_json(state.view_offset)},
          {"camera_delta",
           {{"translation", {state.view_offset.translation.x(), state.view_offset.translation.y(),
                             state.view_offset.translation.z()}},
            {"ypr_deg", {rad_to_deg(ypr.x()), rad_to_deg(ypr.y()), rad_to_deg(ypr.z())}}}}};
}

SceneState import_placements(const SceneState& base, const json& doc) {
  SceneState s = base;
  try {
    s.vehicles.clear();
    for (const auto& v : doc.at("vehicles")) s.vehicles.push_back(vehicle_from_json(v));
    s.deleted_ids = doc.at("deleted_ids").get<std::set<std::string>>();
    s.ego = trajectory_from_json(doc.at("ego_trajectory"));
    s.view_offset = pose_from_json(doc.at("view_offset"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("placement document: ") + e.what());
  }
  auto violations = validate_scene(s);
  if (!violations.empty())
    throw Error(ErrorCode::kSchemaViolation, "imported placements violate scene invariants: " +
                                                 violations.front().field + ": " + violations.front().message);
  return s;
}

SceneState replay(const SceneState& initial, const std::vector<std::string>& commands, const AssetBank& bank,
                  SessionOptions options) {
  options.render_frames = false;
  Session s(initial, bank, options);
  for (const auto& c : commands) s.run(c);
  return s.state();
}

}  // namespace roadscene
