#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "helpers.hpp"
#include "roadscene/error.hpp"
#include "roadscene/motion.hpp"

using namespace roadscene;

namespace {

LaneNode node(Vec2 a, Vec2 b) { return {a, b, LaneType::kCenterline}; }

// Straight chain of nodes from a to b, n pieces.
void add_chain(LaneMap& m, Vec2 a, Vec2 b, int n) {
  for (int i = 0; i < n; ++i) m.nodes.push_back(node(a + (b - a) * (double(i) / n), a + (b - a) * (double(i + 1) / n)));
}

double nearest_midpoint_distance(const Vec2& p, const LaneMap& m) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& n : m.nodes) best = std::min(best, (n.midpoint() - p).norm());
  return best;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_SUITE("motion") {
  TEST_CASE("crop keeps the front 80 m by 40 m box") {
    LaneMap m;
    m.nodes = {node({39, 0}, {41, 0}), node({89, 0}, {91, 0}), node({39, -25}, {41, -25})};
    const LaneMap out = crop_map(m, Pose6D::identity());
    REQUIRE(out.nodes.size() == 1);
    CHECK(out.nodes[0].midpoint() == Vec2(40, 0));
    // The box moves with the ego vehicle.
    Pose6D ego = Pose6D::identity();
    ego.translation = Vec3(50, 0, 0);
    const LaneMap moved = crop_map(m, ego);
    REQUIRE(moved.nodes.size() == 1);
    CHECK(moved.nodes[0].midpoint() == Vec2(90, 0));
  }

  TEST_CASE("sector bearings") {
    CHECK(classify_sector({20, 0}) == Sector::kFront);
    CHECK(classify_sector({10, 10}) == Sector::kLeftFront);
    CHECK(classify_sector({10, -10}) == Sector::kRightFront);
    CHECK(classify_sector({-10, 0}) == Sector::kBack);
    CHECK(classify_sector({0, 5}) == Sector::kLeft);
    CHECK(classify_sector({-1, -5}) == Sector::kRight);
    const auto at = [](double deg) { return Vec2(std::cos(deg_to_rad(deg)), std::sin(deg_to_rad(deg))); };
    CHECK(classify_sector(at(29.9)) == Sector::kFront);
    CHECK(classify_sector(at(30.1)) == Sector::kLeftFront);
    CHECK(classify_sector(at(79.9)) == Sector::kLeftFront);
    CHECK(classify_sector(at(80.1)) == Sector::kLeft);
    CHECK(classify_sector(at(134.9)) == Sector::kLeft);
    CHECK(classify_sector(at(135.1)) == Sector::kBack);
    CHECK(classify_sector(at(-135.1)) == Sector::kBack);
    CHECK(code_of([] { classify_sector({0, 0}); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("single surviving node is the placement") {
    LaneMap m;
    m.nodes = {node({29, 3}, {31, 3}), node({69, 3}, {71, 3}), node({-31, 3}, {-29, 3})};
    PlacementQuery q;
    q.attributes.distance_range = {{20.0, 50.0}};
    q.attributes.sector = Sector::kFront;
    q.attributes.driving_direction.reset();
    const Placement p = place_vehicle(q, m);
    CHECK(p.position == Vec2(30, 3));
    CHECK(p.heading == 0.0);
    CHECK(p.node_index == 0);

    q.attributes.crazy_mode = true;
    const Placement c = place_vehicle(q, m);
    CHECK(c.position == Vec2(30, 3));
    CHECK(std::abs(std::abs(c.heading) - kPi) < 1e-12);

    q.attributes.crazy_mode = false;
    q.occupied = {{Vec2(30, 3), 5.0}};
    CHECK(code_of([&] { place_vehicle(q, m); }) == ErrorCode::kNoFeasiblePlacement);
  }

  TEST_CASE("driving direction filters by motion relative to the ego") {
    LaneMap m;
    testutil::add_lane(m, 20, 40, 0);
    testutil::add_lane(m, 20, 40, 3, 2.0, true);
    PlacementQuery q;
    q.attributes.sector = Sector::kFront;
    q.attributes.driving_direction = DrivingDirection::kTowardEgo;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      q.seed = seed;
      const Placement p = place_vehicle(q, m);
      CHECK(p.position.y() == 3.0);
      CHECK(std::abs(std::abs(p.heading) - kPi) < 1e-12);
    }
    q.attributes.driving_direction = DrivingDirection::kAwayFromEgo;
    CHECK(place_vehicle(q, m).position.y() == 0.0);
  }

  TEST_CASE("placements stay in the annulus and sector; seeds are reproducible") {
    const SceneState s = testutil::demo_scene();
    const LaneMap m = crop_map(s.lane_map, Pose6D::identity());
    for (Sector sec : {Sector::kFront, Sector::kLeftFront, Sector::kRightFront}) {
      PlacementQuery q;
      q.attributes.sector = sec;
      q.attributes.distance_range = {{5.0, 60.0}};
      q.attributes.driving_direction.reset();
      for (std::uint64_t seed = 0; seed < 50; ++seed) {
        q.seed = seed;
        const Placement p = place_vehicle(q, m);
        CHECK(m.nodes[p.node_index].midpoint() == p.position);
        CHECK(m.nodes[p.node_index].type == LaneType::kCenterline);
        CHECK(p.position.norm() >= 5.0);
        CHECK(p.position.norm() <= 60.0);
        CHECK(classify_sector(p.position) == sec);
        CHECK(place_vehicle(q, m).position == p.position);
      }
    }
  }

  TEST_CASE("relative placement lands behind the reference") {
    LaneMap m;
    testutil::add_lane(m, 0, 80, -3, 2.0, true);
    PlacementQuery q;
    q.attributes.relation = Relation::kBehind;
    q.attributes.reference_id = "ref";
    q.attributes.driving_direction.reset();
    q.reference = VehiclePose{51, -3, kPi};
    q.occupied = {{Vec2(51, -3), 3.0}};
    const Placement p = place_vehicle(q, m);
    // Behind a vehicle heading -x is at larger x; chase gap 10 m.
    CHECK(p.position == Vec2(61, -3));
    CHECK(std::abs(std::abs(p.heading) - kPi) < 1e-12);
    q.reference.reset();
    CHECK(code_of([&] { place_vehicle(q, m); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("straight destination snaps to the nearest node midpoint") {
    LaneMap m;
    testutil::add_lane(m, -2, 2, 0, 4.0);
    testutil::add_lane(m, 32, 50, 0, 6.0);
    m.nodes.push_back(node({40, 5}, {42, 5}));
    MotionAttributes a;
    a.speed = 10.0;
    a.duration = 4.0;
    const VehiclePose d = plan_destination({0, 0, 0}, a, m, 1);
    // Oracle: brute-force nearest midpoint to the raw point (40, 0).
    const Vec2 raw(40, 0);
    Vec2 best = m.nodes[0].midpoint();
    for (const auto& n : m.nodes)
      if ((n.midpoint() - raw).norm() < (best - raw).norm()) best = n.midpoint();
    CHECK(best == Vec2(41, 0));
    CHECK(Vec2(d.x, d.y) == best);
    CHECK(d.heading == 0.0);

    a.action = MotionAction::kBackward;
    const VehiclePose b = plan_destination({41, 0, 0}, a, m, 1);
    CHECK(Vec2(b.x, b.y) == Vec2(0, 0));
    CHECK(b.heading == 0.0);
  }

  TEST_CASE("park stays on the start node") {
    LaneMap m;
    testutil::add_lane(m, 0, 40, 0);
    MotionAttributes a;
    a.action = MotionAction::kPark;
    const VehiclePose d = plan_destination({11, 0, 0}, a, m, 3);
    CHECK(d == VehiclePose{11, 0, 0});
    const MotionPlan plan = plan_motion({11, 0, 0}, a, m, 3);
    CHECK(plan.trajectory.samples.size() == 41);
    CHECK(plan.trajectory.end_time() == doctest::Approx(4.0).epsilon(1e-12));
    for (const auto& s : plan.trajectory.samples) CHECK((s.x == 11.0 && s.y == 0.0 && s.heading == 0.0));
  }

  TEST_CASE("turns need nodes on the turn side") {
    LaneMap m;
    testutil::add_lane(m, -4, 10, 0);
    add_chain(m, {20, -4}, {20, -24}, 10);  // heading -y, right of a +x start
    MotionAttributes a;
    a.action = MotionAction::kTurnLeft;
    CHECK(code_of([&] { plan_destination({0, 0, 0}, a, m, 0); }) == ErrorCode::kNoFeasibleDestination);
    a.action = MotionAction::kTurnRight;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const VehiclePose d = plan_destination({0, 0, 0}, a, m, seed);
      CHECK(d.x == doctest::Approx(20.0).epsilon(1e-12));
      CHECK(-d.y >= 5.0);
      CHECK(-d.y <= 30.0);
      CHECK(d.heading == doctest::Approx(-kPi / 2).epsilon(1e-12));
    }
    CHECK(code_of([&] { plan_destination({0, 0, 0}, a, LaneMap{}, 0); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("Bezier control points") {
    const BezierSegment s = solve_bezier({0, 0}, {1, 0}, {30, 0}, {1, 0});
    CHECK(s.p1 == Vec2(10, 0));
    CHECK(s.p2 == Vec2(20, 0));
    CHECK((s.point(0.5) - Vec2(15, 0)).norm() < 1e-12);

    const BezierSegment t = solve_bezier({0, 0}, {1, 0}, {20, 20}, {0, 1});
    const Vec2 d0 = t.derivative(0.0).normalized(), d1 = t.derivative(1.0).normalized();
    CHECK((d0 - Vec2(1, 0)).norm() < 1e-9);
    CHECK((d1 - Vec2(0, 1)).norm() < 1e-9);

    CHECK(code_of([] { solve_bezier({1, 1}, {1, 0}, {1, 1}, {1, 0}); }) == ErrorCode::kInvalidArgument);
    CHECK(code_of([] { solve_bezier({0, 0}, {2, 0}, {1, 1}, {1, 0}); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("Bezier end conditions hold for random inputs") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> pos(-100.0, 100.0), ang(-kPi, kPi);
    int bad = 0;
    for (int i = 0; i < 10000; ++i) {
      const Vec2 a(pos(rng), pos(rng)), b(pos(rng), pos(rng));
      const Vec2 da = heading_vector(ang(rng)), db = heading_vector(ang(rng));
      const BezierSegment s = solve_bezier(a, da, b, db);
      const double scale = 1.0 + (b - a).norm();
      // Oracle: Bernstein form evaluated at the ends, tangents 3(P1 - P0) and 3(P3 - P2).
      const Vec2 t0 = 3.0 * (s.p1 - s.p0), t1 = 3.0 * (s.p3 - s.p2);
      const bool ok = (s.point(0.0) - a).norm() <= 1e-9 * scale && (s.point(1.0) - b).norm() <= 1e-9 * scale &&
                      std::abs(t0.x() * da.y() - t0.y() * da.x()) <= 1e-9 * scale && t0.dot(da) > 0.0 &&
                      std::abs(t1.x() * db.y() - t1.y() * db.x()) <= 1e-9 * scale && t1.dot(db) > 0.0 &&
                      (s.derivative(0.0) - t0).norm() <= 1e-9 * scale && (s.derivative(1.0) - t1).norm() <= 1e-9 * scale;
      if (!ok) ++bad;
    }
    CHECK(bad == 0);
  }

  TEST_CASE("on-road segment is a fixpoint") {
    LaneMap m;
    testutil::add_lane(m, 0, 30, 0);
    const BezierSegment s = solve_bezier({1, 0}, {1, 0}, {29, 0}, {1, 0});
    const RefineResult r = refine_on_road({s}, m, 5);
    CHECK(r.iterations == 0);
    CHECK(r.remaining_off_road == 0);
    REQUIRE(r.segments.size() == 1);
    CHECK(r.segments[0] == s);
  }

  TEST_CASE("dog-leg map forces exactly one split") {
    LaneMap m;
    add_chain(m, {0, 0}, {6, 0}, 3);
    add_chain(m, {6, 0}, {14, 3}, 4);
    m.nodes.push_back(node({14, 3}, {16, 3}));
    add_chain(m, {16, 3}, {24, 0}, 4);
    add_chain(m, {24, 0}, {30, 0}, 3);
    const BezierSegment s = solve_bezier({0, 0}, {1, 0}, {30, 0}, {1, 0});
    CHECK(nearest_midpoint_distance(s.midpoint(), m) > 2.0);

    const RefineResult r = refine_on_road({s}, m, 5);
    CHECK(r.iterations == 1);
    REQUIRE(r.segments.size() == 2);
    CHECK(r.segments[0].p3 == Vec2(15, 3));
    CHECK(r.segments[1].p0 == Vec2(15, 3));
    CHECK(r.segments[0].p0 == s.p0);
    CHECK(r.segments[1].p3 == s.p3);
    for (const auto& c : r.segments) CHECK(nearest_midpoint_distance(c.midpoint(), m) <= 2.0);
    CHECK(r.remaining_off_road == 0);

    const RefineResult none = refine_on_road({s}, m, 0);
    CHECK(none.iterations == 0);
    REQUIRE(none.segments.size() == 1);
    CHECK(none.segments[0] == s);
    CHECK(none.remaining_off_road == 1);
  }

  TEST_CASE("refinement never makes the worst midpoint worse") {
    const LaneMap& m = testutil::demo_scene().lane_map;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> x(-30.0, 110.0), y(-30.0, 30.0), ang(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
      const Vec2 a(x(rng), y(rng)), b(x(rng), y(rng));
      if ((a - b).norm() < 1.0) continue;
      const std::vector<BezierSegment> segs{solve_bezier(a, heading_vector(ang(rng)), b, heading_vector(ang(rng)))};
      const RefineResult r = refine_on_road(segs, m, 5);
      CHECK(worst_off_road(r.segments, m) <= worst_off_road(segs, m) + 1e-12);
      CHECK(r.segments.front().p0 == a);
      CHECK(r.segments.back().p3 == b);
      for (std::size_t k = 1; k < r.segments.size(); ++k) CHECK(r.segments[k].p0 == r.segments[k - 1].p3);
    }
  }

  TEST_CASE("straight 30 m at 10 m/s gives 31 samples 1 m apart") {
    const BezierSegment s = solve_bezier({0, 0}, {1, 0}, {30, 0}, {1, 0});
    const Trajectory t = track_trajectory({s}, 10.0, 0.1, 0.2);
    REQUIRE(t.samples.size() == 31);
    for (std::size_t i = 1; i < t.samples.size(); ++i) {
      CHECK(t.samples[i].x - t.samples[i - 1].x == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(std::abs(t.samples[i].y) < 1e-9);
      CHECK(t.samples[i].t == doctest::Approx(0.1 * i).epsilon(1e-12));
    }
    CHECK(std::hypot(t.samples.back().x - 30.0, t.samples.back().y) < 0.5);
    CHECK(mean_speed(t) == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(code_of([&] { track_trajectory({s}, 0.0, 0.1, 0.2); }) == ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { track_trajectory({}, 10.0, 0.1, 0.2); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("heading rate stays under the curvature limit") {
    for (double kmax : {0.05, 0.2, 1.0}) {
      const BezierSegment s = solve_bezier({0, 0}, {1, 0}, {20, 20}, {0, 1});
      const double speed = 10.0, dt = 0.1;
      const Trajectory t = track_trajectory({s}, speed, dt, kmax);
      for (std::size_t i = 1; i < t.samples.size(); ++i) {
        const double rate = std::abs(wrap_angle(t.samples[i].heading - t.samples[i - 1].heading)) / dt;
        CHECK(rate <= kmax * speed + 1e-9);
      }
      if (kmax >= 0.2) {
        CHECK(std::hypot(t.samples.front().x, t.samples.front().y) < 0.5);
        CHECK(std::hypot(t.samples.back().x - 20.0, t.samples.back().y - 20.0) < 0.5);
      }
    }
  }

  TEST_CASE("within-road rate") {
    LaneMap m;
    testutil::add_lane(m, 0, 40, 0);
    Trajectory on;
    on.dt = 0.1;
    for (int i = 0; i < 20; ++i) on.samples.push_back({0.1 * i, m.nodes[i].midpoint().x(), 0.0, 0.0});
    CHECK(within_road_rate(on, m) == 1.0);
    Trajectory off = on;
    for (auto& s : off.samples) s.y += 10.0;
    CHECK(within_road_rate(off, m) == 0.0);
    Trajectory half = on;
    for (std::size_t i = 0; i < 10; ++i) half.samples[i].y += 10.0;
    CHECK(within_road_rate(half, m) == 0.5);
    CHECK(code_of([&] { within_road_rate(Trajectory{}, m); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("plan_motion on the demo map stays on the road") {
    const SceneState s = testutil::demo_scene();
    for (MotionAction act : {MotionAction::kStraight, MotionAction::kTurnLeft, MotionAction::kTurnRight}) {
      MotionAttributes a;
      a.action = act;
      a.speed = 6.0;
      a.duration = 4.0;
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const MotionPlan p = plan_motion({21, -3, 0}, a, s.lane_map, seed);
        CHECK(within_road_rate(p.trajectory, s.lane_map) == 1.0);
        CHECK(p.trajectory == plan_motion({21, -3, 0}, a, s.lane_map, seed).trajectory);
      }
    }
  }
}
