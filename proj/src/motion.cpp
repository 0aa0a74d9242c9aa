#include "roadscene/motion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roadscene/error.hpp"

namespace roadscene {

std::string_view to_string(Sector s) {
  switch (s) {
    case Sector::kFront: return "front";
    case Sector::kLeftFront: return "left_front";
    case Sector::kRightFront: return "right_front";
    case Sector::kLeft: return "left";
    case Sector::kRight: return "right";
    case Sector::kBack: return "back";
  }
  return "front";
}

std::string_view to_string(DrivingDirection d) {
  return d == DrivingDirection::kTowardEgo ? "toward_ego" : "away_from_ego";
}

std::string_view to_string(MotionAction a) {
  switch (a) {
    case MotionAction::kStraight: return "straightforward";
    case MotionAction::kTurnLeft: return "turn_left";
    case MotionAction::kTurnRight: return "turn_right";
    case MotionAction::kPark: return "park";
    case MotionAction::kBackward: return "backward";
  }
  return "straightforward";
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::kFront: return "front";
    case Relation::kBehind: return "behind";
    case Relation::kLeft: return "left";
    case Relation::kRight: return "right";
  }
  return "front";
}

std::optional<Sector> sector_from_string(std::string_view s) {
  for (Sector v : {Sector::kFront, Sector::kLeftFront, Sector::kRightFront, Sector::kLeft, Sector::kRight,
                   Sector::kBack})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

std::optional<DrivingDirection> driving_direction_from_string(std::string_view s) {
  if (s == "toward_ego") return DrivingDirection::kTowardEgo;
  if (s == "away_from_ego") return DrivingDirection::kAwayFromEgo;
  return std::nullopt;
}

std::optional<MotionAction> motion_action_from_string(std::string_view s) {
  for (MotionAction v : {MotionAction::kStraight, MotionAction::kTurnLeft, MotionAction::kTurnRight,
                         MotionAction::kPark, MotionAction::kBackward})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

std::optional<Relation> relation_from_string(std::string_view s) {
  for (Relation v : {Relation::kFront, Relation::kBehind, Relation::kLeft, Relation::kRight})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

namespace {

Vec2 to_ego_point(const Pose6D& ego, const Vec2& p) {
  return ego.inverse().apply(Vec3(p.x(), p.y(), 0.0)).head<2>();
}

Vec2 to_ego_direction(const Pose6D& ego, const Vec2& d) {
  return (ego.rotation.transpose() * Vec3(d.x(), d.y(), 0.0)).head<2>();
}

Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

double heading_of(const Vec2& d) { return std::atan2(d.y(), d.x()); }

Vec2 unit_or(const Vec2& v, const Vec2& fallback) {
  const double n = v.norm();
  return n > 1e-12 ? Vec2(v / n) : fallback;
}

bool in_relation_region(Relation r, double lon, double lat) {
  switch (r) {
    case Relation::kFront: return lon >= 5.0 && lon <= 20.0 && std::abs(lat) <= 1.5;
    case Relation::kBehind: return lon >= -20.0 && lon <= -5.0 && std::abs(lat) <= 1.5;
    case Relation::kLeft: return lat >= 2.0 && lat <= 10.0 && std::abs(lon) <= 10.0;
    case Relation::kRight: return lat >= -10.0 && lat <= -2.0 && std::abs(lon) <= 10.0;
  }
  return false;
}

Vec2 relation_target(Relation r, double gap) {
  switch (r) {
    case Relation::kFront: return {gap, 0.0};
    case Relation::kBehind: return {-gap, 0.0};
    case Relation::kLeft: return {0.0, 3.5};
    case Relation::kRight: return {0.0, -3.5};
  }
  return Vec2::Zero();
}

bool occupied(const Vec2& p, const std::vector<Occupancy>& occ) {
  for (const auto& o : occ)
    if ((p - o.center).norm() < o.radius) return true;
  return false;
}

std::size_t nearest_centerline(const LaneMap& map, const Vec2& p) {
  std::size_t best = map.nodes.size();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < map.nodes.size(); ++i) {
    if (map.nodes[i].type != LaneType::kCenterline) continue;
    const double d = (map.nodes[i].midpoint() - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

nlohmann::json attributes_detail(const MotionAttributes& a) {
  nlohmann::json j;
  j["sector"] = std::string(to_string(a.sector));
  j["crazy_mode"] = a.crazy_mode;
  j["action"] = std::string(to_string(a.action));
  if (a.driving_direction) j["driving_direction"] = std::string(to_string(*a.driving_direction));
  if (a.distance_range) j["distance_range"] = {a.distance_range->first, a.distance_range->second};
  if (a.relation) {
    j["relation"] = std::string(to_string(*a.relation));
    j["reference_id"] = a.reference_id;
  }
  return j;
}

}  // namespace

LaneMap crop_map(const LaneMap& map, const Pose6D& ego, const MotionSettings& settings) {
  LaneMap out;
  out.frame = map.frame;
  for (const auto& n : map.nodes) {
    const Vec2 m = to_ego_point(ego, n.midpoint());
    if (m.x() >= 0.0 && m.x() <= settings.crop_front && std::abs(m.y()) <= settings.crop_side) out.nodes.push_back(n);
  }
  return out;
}

Sector classify_sector(const Vec2& point) {
  if (point.squaredNorm() == 0.0) throw Error(ErrorCode::kInvalidArgument, "sector of the ego origin is undefined");
  const double deg = rad_to_deg(std::atan2(point.y(), point.x()));
  const double a = std::abs(deg);
  if (a <= 30.0) return Sector::kFront;
  if (a > 135.0) return Sector::kBack;
  const bool left = deg > 0.0;
  if (a <= 80.0) return left ? Sector::kLeftFront : Sector::kRightFront;
  return left ? Sector::kLeft : Sector::kRight;
}

bool is_toward_ego(const Vec2& midpoint, const Vec2& direction) {
  const double n = midpoint.norm();
  if (n > 0.0) {
    const double radial = direction.dot(midpoint / n);
    // Mostly radial motion decides directly; beside the ego vehicle fall back
    // to the sign relative to the ego heading.
    if (std::abs(radial) >= 0.25) return radial < 0.0;
  }
  return direction.x() < 0.0;
}

Placement place_vehicle(const PlacementQuery& query, const LaneMap& map, const Pose6D& ego,
                        const MotionSettings& settings) {
  const MotionAttributes& a = query.attributes;
  if (a.relation && !query.reference)
    throw Error(ErrorCode::kInvalidArgument, "relative placement needs the reference vehicle pose");

  std::vector<Placement> candidates;
  for (std::size_t i = 0; i < map.nodes.size(); ++i) {
    if (map.nodes[i].type != LaneType::kCenterline) continue;
    const LaneNode n = a.crazy_mode ? map.nodes[i].reversed() : map.nodes[i];
    const Vec2 mid = n.midpoint();
    const Vec2 dir = n.direction();
    const Vec2 m_ego = to_ego_point(ego, mid);
    const Vec2 d_ego = to_ego_direction(ego, dir);

    if (a.relation) {
      const VehiclePose& ref = *query.reference;
      const Vec2 rel = rotate(mid - Vec2(ref.x, ref.y), -ref.heading);
      if (!in_relation_region(*a.relation, rel.x(), rel.y())) continue;
    } else {
      if (m_ego.squaredNorm() == 0.0) continue;
      if (a.distance_range) {
        const double d = m_ego.norm();
        if (d < a.distance_range->first || d > a.distance_range->second) continue;
      }
      if (classify_sector(m_ego) != a.sector) continue;
    }

    if (a.driving_direction) {
      const bool toward = is_toward_ego(m_ego, d_ego);
      if (toward != (*a.driving_direction == DrivingDirection::kTowardEgo)) continue;
    } else if (a.relation) {
      if (dir.dot(heading_vector(query.reference->heading)) <= 0.0) continue;
    }
    if (occupied(mid, query.occupied)) continue;
    candidates.push_back({mid, wrap_angle(n.heading()), i});
  }

  if (candidates.empty())
    throw Error(ErrorCode::kNoFeasiblePlacement, "no lane node satisfies the placement attributes",
                {{"attributes", attributes_detail(a)}});

  if (a.relation) {
    const VehiclePose& ref = *query.reference;
    const Vec2 target = Vec2(ref.x, ref.y) + rotate(relation_target(*a.relation, settings.chase_gap), ref.heading);
    return *std::min_element(candidates.begin(), candidates.end(), [&](const Placement& x, const Placement& y) {
      return (x.position - target).squaredNorm() < (y.position - target).squaredNorm();
    });
  }
  SplitMix64 rng(query.seed);
  return candidates[rng.pick(candidates.size())];
}

VehiclePose plan_destination(const VehiclePose& start, const MotionAttributes& attrs, const LaneMap& map,
                             std::uint64_t seed, const MotionSettings& settings) {
  if (nearest_centerline(map, Vec2::Zero()) == map.nodes.size())
    throw Error(ErrorCode::kInvalidArgument, "lane map has no centerline nodes");
  const Vec2 p(start.x, start.y);
  const Vec2 h = heading_vector(start.heading);

  if (attrs.action == MotionAction::kTurnLeft || attrs.action == MotionAction::kTurnRight) {
    const bool left = attrs.action == MotionAction::kTurnLeft;
    const Vec2 side = left ? Vec2(-h.y(), h.x()) : Vec2(h.y(), -h.x());
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < map.nodes.size(); ++i) {
      if (map.nodes[i].type != LaneType::kCenterline) continue;
      const LaneNode n = attrs.crazy_mode ? map.nodes[i].reversed() : map.nodes[i];
      const Vec2 rel = n.midpoint() - p;
      const double lat = rel.dot(side);
      const double lon = rel.dot(h);
      if (lat < settings.turn_lateral_min || lat > settings.turn_lateral_max || lon <= 0.0) continue;
      if (n.direction().dot(side) <= 0.5) continue;
      candidates.push_back(i);
    }
    if (candidates.empty())
      throw Error(ErrorCode::kNoFeasibleDestination,
                  std::string("no lane node for a ") + (left ? "left" : "right") + " turn",
                  {{"start", {start.x, start.y, start.heading}}});
    SplitMix64 rng(seed);
    const std::size_t idx = candidates[rng.pick(candidates.size())];
    const LaneNode n = attrs.crazy_mode ? map.nodes[idx].reversed() : map.nodes[idx];
    return {n.midpoint().x(), n.midpoint().y(), wrap_angle(n.heading())};
  }

  if (attrs.action == MotionAction::kPark) {
    const std::size_t idx = nearest_centerline(map, p);
    const Vec2 m = map.nodes[idx].midpoint();
    return {m.x(), m.y(), start.heading};
  }

  const bool backward = attrs.action == MotionAction::kBackward;
  const Vec2 travel = backward ? Vec2(-h) : h;
  const Vec2 raw = p + travel * attrs.speed * attrs.duration;
  const std::size_t idx = nearest_centerline(map, raw);
  Vec2 dest = map.nodes[idx].midpoint();
  Vec2 dir = map.nodes[idx].direction();
  if (dir.dot(travel) < 0.0) dir = -dir;
  if ((dest - p).norm() < 1e-9) {
    // Snapping fell back onto the start node: keep the raw point.
    dest = raw;
    dir = travel;
  }
  double heading = heading_of(dir);
  if (backward) heading += kPi;
  return {dest.x(), dest.y(), wrap_angle(heading)};
}

Vec2 BezierSegment::point(double t) const {
  const double u = 1.0 - t;
  return u * u * u * p0 + 3.0 * u * u * t * p1 + 3.0 * u * t * t * p2 + t * t * t * p3;
}

Vec2 BezierSegment::derivative(double t) const {
  const double u = 1.0 - t;
  return 3.0 * u * u * (p1 - p0) + 6.0 * u * t * (p2 - p1) + 3.0 * t * t * (p3 - p2);
}

BezierSegment solve_bezier(const Vec2& p_start, const Vec2& dir_start, const Vec2& p_end, const Vec2& dir_end) {
  const double len = (p_end - p_start).norm();
  if (!(len > 0.0)) throw Error(ErrorCode::kInvalidArgument, "Bezier endpoints coincide");
  if (std::abs(dir_start.norm() - 1.0) > 1e-9 || std::abs(dir_end.norm() - 1.0) > 1e-9)
    throw Error(ErrorCode::kInvalidArgument, "Bezier end directions must be unit vectors");
  BezierSegment s;
  s.p0 = p_start;
  s.p3 = p_end;
  s.p1 = p_start + (len / 3.0) * dir_start;
  s.p2 = p_end - (len / 3.0) * dir_end;
  return s;
}

double off_road_distance(const Vec2& p, const LaneMap& map) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& n : map.nodes)
    if (n.type == LaneType::kCenterline) best = std::min(best, (n.midpoint() - p).squaredNorm());
  return std::sqrt(best);
}

namespace {

// Worst probe of one segment: (distance, probe index). Index kRefineProbes / 2
// is the midpoint.
std::pair<double, int> worst_probe(const BezierSegment& s, const LaneMap& map) {
  std::pair<double, int> worst{-1.0, 0};
  for (int k = 1; k < kRefineProbes; ++k) {
    const double d = off_road_distance(s.point(double(k) / kRefineProbes), map);
    if (d > worst.first) worst = {d, k};
  }
  return worst;
}

}  // namespace

double worst_off_road(const std::vector<BezierSegment>& segments, const LaneMap& map) {
  double worst = 0.0;
  for (const auto& s : segments) worst = std::max(worst, worst_probe(s, map).first);
  return worst;
}

RefineResult refine_on_road(const std::vector<BezierSegment>& segments, const LaneMap& map, int max_iters,
                            double threshold) {
  RefineResult out;
  out.segments = segments;
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    std::vector<BezierSegment> next;
    for (const auto& s : out.segments) {
      const double d = worst_probe(s, map).first;
      if (d <= threshold) {
        next.push_back(s);
        continue;
      }
      // Split candidates: the node nearest the midpoint, then the nodes
      // nearest each off-road probe in order of distance.
      std::vector<std::pair<double, Vec2>> probes;
      for (int k = 1; k < kRefineProbes; ++k) {
        const Vec2 p = s.point(double(k) / kRefineProbes);
        const double dk = off_road_distance(p, map);
        if (dk > threshold) probes.push_back({k == kRefineProbes / 2 ? std::numeric_limits<double>::infinity() : dk, p});
      }
      std::stable_sort(probes.begin(), probes.end(), [](const auto& x, const auto& y) { return x.first > y.first; });

      const Vec2 chord = unit_or(s.p3 - s.p0, Vec2::UnitX());
      const Vec2 d0 = unit_or(s.p1 - s.p0, chord);
      const Vec2 d3 = unit_or(s.p3 - s.p2, chord);
      bool split = false;
      for (const auto& [unused, probe] : probes) {
        const Vec2 q = map.nodes[nearest_centerline(map, probe)].midpoint();
        if ((q - s.p0).norm() < 1e-6 || (s.p3 - q).norm() < 1e-6) continue;
        // Chord-average direction first, then the node's own lane direction
        // when it points along the chord.
        const Vec2 node_dir = map.nodes[nearest_centerline(map, probe)].direction();
        std::vector<Vec2> dirs{unit_or((q - s.p0).normalized() + (s.p3 - q).normalized(), chord)};
        if (node_dir.dot(s.p3 - s.p0) > 0.0) dirs.push_back(node_dir);
        for (const Vec2& dq : dirs) {
          const BezierSegment a = solve_bezier(s.p0, d0, q, dq);
          const BezierSegment b = solve_bezier(q, dq, s.p3, d3);
          // A split must not push either half farther off the road than its parent.
          if (std::max(worst_probe(a, map).first, worst_probe(b, map).first) <= d) {
            next.push_back(a);
            next.push_back(b);
            split = true;
            break;
          }
        }
        if (split) break;
      }
      if (split)
        changed = true;
      else
        next.push_back(s);
    }
    if (!changed) break;
    out.segments = std::move(next);
    ++out.iterations;
  }
  for (const auto& s : out.segments)
    if (worst_probe(s, map).first > threshold) ++out.remaining_off_road;
  return out;
}

namespace {

struct Polyline {
  std::vector<Vec2> points;
  std::vector<double> cumulative;

  double length() const { return cumulative.back(); }

  Vec2 at(double s) const {
    if (s <= 0.0) return points.front();
    if (s >= length()) return points.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - cumulative.begin());
    const double span = cumulative[i] - cumulative[i - 1];
    const double f = span > 0.0 ? (s - cumulative[i - 1]) / span : 0.0;
    return points[i - 1] + f * (points[i] - points[i - 1]);
  }
};

Polyline flatten(const std::vector<BezierSegment>& segments) {
  constexpr int kSteps = 64;
  Polyline pl;
  for (std::size_t k = 0; k < segments.size(); ++k)
    for (int j = (k == 0 ? 0 : 1); j <= kSteps; ++j) pl.points.push_back(segments[k].point(double(j) / kSteps));
  pl.cumulative.resize(pl.points.size(), 0.0);
  for (std::size_t i = 1; i < pl.points.size(); ++i)
    pl.cumulative[i] = pl.cumulative[i - 1] + (pl.points[i] - pl.points[i - 1]).norm();
  return pl;
}

}  // namespace

Trajectory track_trajectory(const std::vector<BezierSegment>& segments, double speed, double dt,
                            double max_curvature) {
  if (!(speed > 0.0) || !(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "speed and dt must be positive");
  if (segments.empty()) throw Error(ErrorCode::kInvalidArgument, "no path to track");
  const Polyline path = flatten(segments);
  const double total = path.length();
  if (!(total > 1e-9)) throw Error(ErrorCode::kInvalidArgument, "path has zero length");

  const double nominal = speed * dt;
  const long steps = std::max(1L, std::lround(total / nominal));
  const double ds = total / static_cast<double>(steps);
  const double max_turn = max_curvature * std::min(ds, nominal);

  // Positions are arc-length samples of the path; the heading follows the
  // local chord under the rate limit.
  double heading = heading_of(unit_or(segments.front().derivative(0.0), unit_or(path.at(ds) - path.points.front(), Vec2::UnitX())));
  Trajectory tr;
  tr.dt = dt;
  tr.samples.reserve(static_cast<std::size_t>(steps) + 1);
  Vec2 prev = path.points.front();
  tr.samples.push_back({0.0, prev.x(), prev.y(), wrap_angle(heading)});
  for (long i = 1; i <= steps; ++i) {
    const Vec2 pos = path.at(static_cast<double>(i) * ds);
    const Vec2 step = pos - prev;
    if (step.norm() > 1e-9)
      heading += std::clamp(wrap_angle(heading_of(step) - heading), -max_turn, max_turn);
    tr.samples.push_back({static_cast<double>(i) * dt, pos.x(), pos.y(), wrap_angle(heading)});
    prev = pos;
  }
  return tr;
}

Trajectory hold_trajectory(const VehiclePose& pose, double duration, double dt) {
  return constant_pose_trajectory(pose.x, pose.y, pose.heading, duration, dt);
}

double within_road_rate(const Trajectory& traj, const LaneMap& map, double threshold) {
  if (traj.samples.empty()) throw Error(ErrorCode::kInvalidArgument, "empty trajectory");
  std::size_t inside = 0;
  for (const auto& s : traj.samples)
    if (off_road_distance({s.x, s.y}, map) <= threshold) ++inside;
  return static_cast<double>(inside) / static_cast<double>(traj.samples.size());
}

double mean_speed(const Trajectory& traj) {
  if (traj.samples.size() < 2) return 0.0;
  double len = 0.0;
  for (std::size_t i = 1; i < traj.samples.size(); ++i)
    len += std::hypot(traj.samples[i].x - traj.samples[i - 1].x, traj.samples[i].y - traj.samples[i - 1].y);
  return len / (traj.end_time() - traj.start_time());
}

MotionPlan plan_motion(const VehiclePose& start, const MotionAttributes& attrs, const LaneMap& map,
                       std::uint64_t seed, const MotionSettings& settings) {
  MotionPlan plan;
  plan.start = start;
  if (attrs.action == MotionAction::kPark || !(attrs.speed > 0.0)) {
    plan.destination = start;
    plan.trajectory = hold_trajectory(start, attrs.duration, settings.dt);
    return plan;
  }
  plan.destination = plan_destination(start, attrs, map, seed, settings);
  const Vec2 p0(start.x, start.y);
  const Vec2 p3(plan.destination.x, plan.destination.y);
  if ((p3 - p0).norm() < 1e-6) {
    plan.trajectory = hold_trajectory(start, attrs.duration, settings.dt);
    return plan;
  }
  const bool backward = attrs.action == MotionAction::kBackward;
  const double flip = backward ? kPi : 0.0;
  const BezierSegment seg = solve_bezier(p0, heading_vector(start.heading + flip), p3,
                                         heading_vector(plan.destination.heading + flip));
  // The probes sample the curve sparsely, so the tracked samples are checked
  // too; a failing plan is refined again against a tighter target.
  double best_rate = -1.0;
  for (double target = settings.off_road_threshold; target >= 0.5 * settings.off_road_threshold - 1e-12;
       target -= 0.25) {
    RefineResult refined = refine_on_road({seg}, map, settings.max_refine_iters, target);
    Trajectory tr = track_trajectory(refined.segments, attrs.speed, settings.dt, settings.max_curvature);
    const double rate = within_road_rate(tr, map, settings.off_road_threshold);
    if (rate > best_rate) {
      best_rate = rate;
      plan.segments = std::move(refined.segments);
      plan.remaining_off_road = refined.remaining_off_road;
      plan.trajectory = std::move(tr);
    }
    if (rate == 1.0) break;
  }
  if (backward)
    for (auto& s : plan.trajectory.samples) s.heading = wrap_angle(s.heading + kPi);
  return plan;
}

}  // namespace roadscene
