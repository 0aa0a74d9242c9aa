#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "roadscene/error.hpp"
#include "roadscene/orchestrator.hpp"
#include "roadscene/scene_io.hpp"

using namespace roadscene;
using nlohmann::json;

namespace {

const std::string kMixed =
    "Remove all cars in the scene and add a Porsche driving the wrong way toward me fast. Additionally, add a police "
    "car also driving the wrong way and chasing behind the Porsche. The view should be moved 5 meters ahead and 0.5 "
    "meters above.";
const std::string kRound1 = "Ego vehicle drives ahead slowly. Add a car to the close front that is moving ahead.";
const std::string kRound2 =
    "Modify the added car to turn left. Add a Chevrolet to the front of the added car. Add another vehicle to the left "
    "of the added Mini driving toward me.";

SessionOptions quiet(std::uint64_t seed = 0) {
  SessionOptions o;
  o.seed = seed;
  o.render_frames = false;
  return o;
}

std::string snapshot(const SceneState& s) { return scene_to_json(s).dump(); }

std::set<AgentRole> role_set(const WorkOrder& w) {
  const auto r = w.roles();
  return {r.begin(), r.end()};
}

SceneState straight_lane_scene() {
  SceneState s = testutil::demo_scene();
  s.vehicles.clear();
  s.lane_map.nodes.clear();
  testutil::add_lane(s.lane_map, 0.0, 60.0, -3.0);
  return s;
}

EditConfig jam(std::optional<int> count = std::nullopt) {
  EditConfig c;
  c.action = EditAction::kAbstractExpand;
  c.parameters = {{"phrase", "traffic jam"}};
  if (count) c.parameters["count"] = *count;
  return c;
}

// Largest set of free slots with pairwise gap >= spacing in one lane
// (quadratic DP over sorted positions).
int max_spaced(std::vector<double> xs, double spacing) {
  std::sort(xs.begin(), xs.end());
  std::vector<int> best(xs.size(), 1);
  int out = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j)
      if (xs[i] - xs[j] >= spacing) best[i] = std::max(best[i], best[j] + 1);
    out = std::max(out, best[i]);
  }
  return out;
}

}  // namespace

TEST_SUITE("orchestrator") {
  TEST_CASE("mixed command routes to every editing role") {
    const Session s(testutil::demo_scene(), testutil::demo_bank(), quiet());
    const WorkOrder w = s.plan(kMixed);
    CHECK(role_set(w) == std::set<AgentRole>{AgentRole::kViewAdjust, AgentRole::kVehicleDelete,
                                             AgentRole::kAssetManage, AgentRole::kVehicleMotion,
                                             AgentRole::kBackgroundRender, AgentRole::kForegroundRender});
    CHECK(!w.has_role(AgentRole::kProjectManager));
    REQUIRE(w.configs.size() == 4);
    CHECK(w.configs[0].parameters["target_ids"].size() == 3);
    CHECK(w.configs[1].parameters["instance_ids"] == json::array({"v1_1"}));
    CHECK(w.configs[1].parameters["asset_types"] == json::array({"Porsche"}));
    // The police car's reference resolves to the Porsche planned in the same round.
    CHECK(w.configs[2].parameters["reference_id"] == "v1_1");
    CHECK(w.configs[2].parameters["asset_types"] == json::array({"police car"}));

    const auto order = w.execution_order();
    auto pos = [&](AgentRole r) { return std::find(order.begin(), order.end(), r) - order.begin(); };
    CHECK(pos(AgentRole::kViewAdjust) < pos(AgentRole::kBackgroundRender));
    CHECK(pos(AgentRole::kViewAdjust) < pos(AgentRole::kForegroundRender));
    CHECK(pos(AgentRole::kAssetManage) < pos(AgentRole::kVehicleMotion));
    CHECK(pos(AgentRole::kVehicleMotion) < pos(AgentRole::kForegroundRender));
  }

  TEST_CASE("pure view command") {
    const Session s(testutil::demo_scene(), testutil::demo_bank(), quiet());
    CHECK(role_set(s.plan("Move the camera 2 meters to the left.")) ==
          std::set<AgentRole>{AgentRole::kViewAdjust, AgentRole::kBackgroundRender, AgentRole::kForegroundRender});
  }

  TEST_CASE("work order graph errors") {
    WorkOrder w;
    w.assignments[AgentRole::kViewAdjust];
    w.assignments[AgentRole::kBackgroundRender];
    w.edges = {{AgentRole::kViewAdjust, AgentRole::kBackgroundRender},
               {AgentRole::kBackgroundRender, AgentRole::kViewAdjust}};
    CHECK_THROWS_AS(w.execution_order(), Error);
    w.edges = {{AgentRole::kViewAdjust, AgentRole::kVehicleMotion}};
    CHECK_THROWS_AS(w.execution_order(), Error);
  }

  TEST_CASE("traffic jam on a straight lane gives six slots 8 m apart") {
    const auto out = expand_abstract(jam(), straight_lane_scene());
    REQUIRE(out.size() == 6);
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i].action == EditAction::kAdd);
      CHECK(out[i].parameters["speed"] == 0.5);
      CHECK(out[i].parameters["anchor_x"].get<double>() == doctest::Approx(5.0 + 8.0 * i));
      CHECK(out[i].parameters["anchor_y"].get<double>() == -3.0);
    }
    CHECK(expand_abstract(jam(2), straight_lane_scene()).size() == 2);
  }

  TEST_CASE("traffic jam on the demo map matches a brute-force slot count") {
    const SceneState s = testutil::demo_scene();
    const AbstractPolicy pol;
    const auto out = expand_abstract(jam(), s);

    std::map<long, std::vector<double>> free_by_lane;
    for (const auto& n : s.lane_map.nodes) {
      const Vec2 m = n.midpoint();
      if (n.type != LaneType::kCenterline || n.direction().x() <= 0.9 || m.x() < pol.x_min || m.x() > pol.x_max)
        continue;
      bool taken = false;
      for (const auto& v : s.vehicles)
        taken |= std::hypot(m.x() - v.pose.x, m.y() - v.pose.y) < 0.5 * vehicle_dimensions(v).x() + 1.0;
      if (!taken) free_by_lane[std::lround(m.y() * 2)].push_back(m.x());
    }
    int expected = 0;
    for (const auto& [lane, xs] : free_by_lane) expected += max_spaced(xs, pol.spacing);
    CHECK(expected > 0);
    CHECK(out.size() == static_cast<std::size_t>(expected));

    std::map<long, std::vector<double>> placed;
    for (const auto& c : out) {
      const double x = c.parameters["anchor_x"], y = c.parameters["anchor_y"];
      auto& lane = free_by_lane[std::lround(y * 2)];
      CHECK(std::find(lane.begin(), lane.end(), x) != lane.end());
      placed[std::lround(y * 2)].push_back(x);
    }
    for (auto& [lane, xs] : placed) {
      std::sort(xs.begin(), xs.end());
      for (std::size_t i = 1; i < xs.size(); ++i) CHECK(xs[i] - xs[i - 1] >= pol.spacing);
    }
    CHECK(expand_abstract(jam(), s).size() == out.size());
  }

  TEST_CASE("jam with no free slot warns, unknown phrase throws") {
    SceneState s = straight_lane_scene();
    s.lane_map.nodes.clear();
    testutil::add_lane(s.lane_map, 0.0, 60.0, -3.0, 2.0, true);  // oncoming only
    CHECK(expand_abstract(jam(), s).empty());
    Session session(s, testutil::demo_bank(), quiet());
    const WorkOrder w = session.plan("Create a traffic jam.");
    CHECK(w.configs.empty());
    REQUIRE(w.warnings.size() == 1);
    CHECK(w.warnings[0].find("no free lane slot") != std::string::npos);

    EditConfig rain;
    rain.action = EditAction::kAbstractExpand;
    rain.parameters = {{"phrase", "make it rain"}};
    try {
      expand_abstract(rain, s);
      FAIL("expected kUnsupportedAbstraction");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnsupportedAbstraction);
    }
  }

  TEST_CASE("traffic jam round adds one vehicle per slot") {
    Session s(straight_lane_scene(), testutil::demo_bank(), quiet());
    const WorkOrder w = s.plan("Create a traffic jam.");
    CHECK(w.configs.size() == 6);
    CHECK(role_set(w) == std::set<AgentRole>{AgentRole::kAssetManage, AgentRole::kVehicleMotion,
                                             AgentRole::kBackgroundRender, AgentRole::kForegroundRender});
    s.execute(w);
    CHECK(s.state().vehicles.size() == 6);
    for (const auto& v : s.state().vehicles) CHECK(v.pose.y == -3.0);
  }

  TEST_CASE("empty order and add-only rounds") {
    Session s(straight_lane_scene(), testutil::demo_bank(), quiet());
    const std::string before = snapshot(s.state());
    const RoundResult r = s.execute(WorkOrder{});
    CHECK(r.frames.empty());
    CHECK(r.trace.empty());
    CHECK(snapshot(s.state()) == before);

    s.run("Add a red car. Add a bus.");
    CHECK(s.state().vehicles.size() == 2);
    CHECK(s.state().history.size() == 2);
    CHECK(s.rounds() == 1);
  }

  TEST_CASE("failing role leaves the state byte-identical") {
    Session s(testutil::demo_scene(), testutil::demo_bank(), quiet());
    s.run("Delete the red car.");
    const std::string before = snapshot(s.state());
    s.before_role = [](AgentRole r) {
      if (r == AgentRole::kVehicleMotion) throw Error(ErrorCode::kNoFeasiblePlacement, "injected");
    };
    try {
      s.run(kMixed);
      FAIL("expected kRoundFailed");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kRoundFailed);
      CHECK(e.detail()["role"] == "vehicle_motion");
      CHECK(e.detail()["cause"]["message"] == "injected");
    }
    CHECK(snapshot(s.state()) == before);
    CHECK(s.rounds() == 1);
  }

  TEST_CASE("unplaceable vehicle aborts the round") {
    SceneState scene = straight_lane_scene();
    Session s(scene, testutil::demo_bank(), quiet());
    const std::string before = snapshot(s.state());
    // Only one lane, straight ahead: nothing exists on the left.
    try {
      s.run("Add a car on the left.");
      FAIL("expected kRoundFailed");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kRoundFailed);
      CHECK(e.detail()["role"] == "vehicle_motion");
      CHECK(e.detail()["cause"]["error"] == "no_feasible_placement");
      CHECK(e.detail()["config"]["action"] == "add");
    }
    CHECK(snapshot(s.state()) == before);
  }

  TEST_CASE("unresolved reference fails at planning") {
    Session s(testutil::demo_scene(), testutil::demo_bank(), quiet());
    const std::string before = snapshot(s.state());
    CHECK_THROWS_AS(s.run("Modify the added car to turn left."), Error);
    CHECK_THROWS_AS(s.run("Delete the blue bus."), Error);
    CHECK(snapshot(s.state()) == before);
    CHECK(s.rounds() == 0);
  }

  TEST_CASE("trace honors the dependency edges") {
    Session s(testutil::demo_scene(), testutil::demo_bank(), quiet());
    std::vector<AgentRole> started;
    s.before_role = [&](AgentRole r) { started.push_back(r); };
    const RoundResult r = s.run(kMixed);
    auto index = [&](AgentRole role, const std::string& phase) {
      for (std::size_t i = 0; i < r.trace.size(); ++i)
        if (r.trace[i].role == role && r.trace[i].phase == phase) return static_cast<long>(i);
      return -1L;
    };
    for (AgentRole role : {AgentRole::kBackgroundRender, AgentRole::kForegroundRender}) {
      REQUIRE(index(role, "start") >= 0);
      CHECK(index(AgentRole::kViewAdjust, "end") < index(role, "start"));
    }
    CHECK(index(AgentRole::kVehicleMotion, "end") < index(AgentRole::kForegroundRender, "start"));
    CHECK(index(AgentRole::kAssetManage, "end") < index(AgentRole::kVehicleMotion, "start"));
    CHECK(started.size() == 6);
    CHECK(r.trace.size() == 12);
  }

  TEST_CASE("mixed command leaves two added vehicles and a camera delta") {
    Session s(testutil::demo_scene(), testutil::demo_bank(), quiet());
    const RoundResult r = s.run(kMixed);
    const SceneState& st = s.state();
    REQUIRE(st.vehicles.size() == 2);
    CHECK(st.deleted_ids == std::set<std::string>{"scene_grey_truck", "scene_red_sedan", "scene_white_van"});
    const PlacedVehicle* porsche = st.find_vehicle("v1_1");
    const PlacedVehicle* police = st.find_vehicle("v1_2");
    REQUIRE(porsche);
    REQUIRE(police);
    CHECK(porsche->attributes["type"] == "Porsche");
    CHECK(police->attributes["type"] == "police car");
    CHECK(porsche->attributes["motion"]["crazy_mode"] == true);
    CHECK(porsche->attributes["motion"]["driving_direction"] == "toward_ego");
    CHECK(porsche->attributes["motion"]["speed"] == 12.0);
    CHECK(police->attributes["motion"]["relation"] == "behind");
    CHECK(police->attributes["motion"]["reference_id"] == "v1_1");
    CHECK(police->attributes["motion"]["chase"] == true);
    CHECK(porsche->trajectory.has_value());
    CHECK(police->trajectory.has_value());
    CHECK(st.view_offset.translation.isApprox(Vec3(5.0, 0.0, 0.5), 1e-12));
    CHECK(r.summary["vehicles"] == 2);
  }

  TEST_CASE("multi-round script reaches the documented contents") {
    Session s(testutil::demo_scene(), testutil::demo_bank(), quiet(3));
    s.run(kRound1);
    {
      const SceneState& st = s.state();
      CHECK(st.vehicles.size() == 4);
      const PlacedVehicle* car = st.find_vehicle("v1_1");
      REQUIRE(car);
      CHECK(car->attributes["type"] == "Mini");
      CHECK(car->attributes["motion"]["action"] == "straightforward");
      CHECK(car->attributes["motion"]["sector"] == "front");
      const double d = std::hypot(car->pose.x, car->pose.y);
      CHECK(d >= 5.0);
      CHECK(d <= 20.0);
      // Ego drives ahead slowly: 4 m/s.
      const auto& e = st.ego.samples;
      CHECK((e.back().x - e.front().x) / (e.back().t - e.front().t) == doctest::Approx(4.0));
    }
    s.run(kRound2);
    const SceneState& st = s.state();
    CHECK(st.vehicles.size() == 6);
    CHECK(s.rounds() == 2);
    const PlacedVehicle* mini = st.find_vehicle("v1_1");
    const PlacedVehicle* chevy = st.find_vehicle("v2_1");
    const PlacedVehicle* other = st.find_vehicle("v2_2");
    REQUIRE(mini);
    REQUIRE(chevy);
    REQUIRE(other);
    CHECK(mini->attributes["motion"]["action"] == "turn_left");
    CHECK(chevy->attributes["type"] == "Chevrolet");
    CHECK(chevy->attributes["motion"]["relation"] == "front");
    CHECK(chevy->attributes["motion"]["reference_id"] == "v1_1");
    CHECK(other->attributes["motion"]["relation"] == "left");
    CHECK(other->attributes["motion"]["reference_id"] == "v1_1");
    CHECK(other->attributes["motion"]["driving_direction"] == "toward_ego");
    CHECK(st.history.size() == 5);
  }

  TEST_CASE("replay and export are deterministic") {
    for (std::uint64_t seed : {0ull, 11ull}) {
      Session s(testutil::demo_scene(), testutil::demo_bank(), quiet(seed));
      s.run(kRound1);
      s.run(kRound2);
      const SceneState again = replay(s.initial_state(), s.commands(), s.bank(), quiet(seed));
      CHECK(snapshot(again) == snapshot(s.state()));
      CHECK(export_placements(again).dump() == export_placements(s.state()).dump());
    }
  }

  TEST_CASE("placement export round-trips") {
    Session s(testutil::demo_scene(), testutil::demo_bank(), quiet());
    s.run(kMixed);
    const json doc = export_placements(s.state());
    CHECK(doc["vehicles"].size() == 2);
    CHECK(doc["assets"].size() == 2);
    CHECK(doc["camera_delta"]["translation"] == json::array({5.0, 0.0, 0.5}));
    const SceneState back = import_placements(s.initial_state(), json::parse(doc.dump()));
    CHECK(back.vehicles == s.state().vehicles);
    CHECK(back.deleted_ids == s.state().deleted_ids);
    CHECK(export_placements(back).dump() == doc.dump());

    json broken = doc;
    broken.erase("vehicles");
    CHECK_THROWS_AS(import_placements(s.initial_state(), broken), Error);
  }

  TEST_CASE("round seeds differ by round and index") {
    CHECK(round_seed(1, 1, 1) == round_seed(1, 1, 1));
    CHECK(round_seed(1, 1, 1) != round_seed(1, 2, 1));
    CHECK(round_seed(1, 1, 1) != round_seed(1, 1, 2));
    CHECK(round_seed(1, 1, 1) != round_seed(2, 1, 1));
  }
}

TEST_SUITE("render") {
  TEST_CASE("rendered round produces composed frames") {
    SessionOptions o;
    o.render.frames = 3;
    o.render.width = 48;
    o.render.height = 32;
    o.render.samples = 24;
    o.render.probe_height = 8;
    o.render.probe_width = 16;
    Session s(testutil::demo_scene(), testutil::demo_bank(), o);
    const RoundResult before = s.run("Move the view 1 meter up.");
    REQUIRE(before.frames.size() == 3);
    CHECK(before.frames[0].height() == 32);
    CHECK(before.frames[0].width() == 48);
    const RoundResult after = s.run("Add a red car 10 to 20 meters ahead.");
    REQUIRE(after.frames.size() == 3);
    CHECK(s.frames().size() == 3);
    int changed = 0;
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 48; ++c) changed += !(after.frames[0](r, c) == before.frames[0](r, c));
    CHECK(changed > 0);
  }
}
