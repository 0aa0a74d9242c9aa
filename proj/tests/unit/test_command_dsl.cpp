#include <doctest.h>

#include <chrono>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "roadscene/command_dsl.hpp"
#include "roadscene/error.hpp"

// After Eigen: httplib pulls in socket headers that clash with its templates.
#include <httplib.h>

using namespace roadscene;
using nlohmann::json;

namespace {

json wire(const std::vector<EditConfig>& cs) {
  json a = json::array();
  for (const auto& c : cs) a.push_back(to_json(c));
  return a;
}

json load_fixture(const std::string& name) {
  std::ifstream in(testutil::fixture_dir() / name);
  return json::parse(in);
}

EditConfig add_cfg(json params) {
  EditConfig c;
  c.action = EditAction::kAdd;
  c.parameters = std::move(params);
  return c;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

const std::string kMixed =
    "Remove all cars in the scene and add a Porsche driving the wrong way toward me fast. Additionally, add a police "
    "car also driving the wrong way and chasing behind the Porsche. The view should be moved 5 meters ahead and 0.5 "
    "meters above.";

// Local stand-in for a remote interpreter.
struct FakeModel {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  json last_request;

  explicit FakeModel(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server.Post("/v1/interpret", [this, handler](const httplib::Request& req, httplib::Response& res) {
      last_request = json::parse(req.body);
      handler(req, res);
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeModel() {
    server.stop();
    thread.join();
  }
  InterpreterBackend backend(double timeout = 5.0) const {
    return {InterpreterBackend::Kind::kRemoteModel, "http://127.0.0.1:" + std::to_string(port) + "/v1/interpret",
            timeout};
  }
};

}  // namespace

TEST_SUITE("command_dsl") {
  TEST_CASE("mixed command decomposes into four configs") {
    const auto cs = parse_command({kMixed, 0});
    REQUIRE(cs.size() == 4);
    CHECK(wire(cs) == load_fixture("remote_mixed_command.json")["configs"]);
    CHECK(cs[0].action == EditAction::kDelete);
    CHECK(cs[3].action == EditAction::kViewChange);
  }

  TEST_CASE("corpus of 60 commands matches hand-derived configs") {
    const json corpus = load_fixture("dsl_corpus.json");
    REQUIRE(corpus.size() == 60);
    std::map<std::string, int> per_category;
    int matched = 0;
    for (const auto& item : corpus) {
      const std::string cmd = item["command"];
      ++per_category[item["category"]];
      json got;
      try {
        got = wire(parse_command({cmd, 0}));
      } catch (const Error& e) {
        got = std::string("error: ") + e.what();
      }
      json want = item["expected"];
      for (auto& w : want) w["round"] = 0;
      if (got == want) ++matched;
      else
        MESSAGE(cmd << "\n  want " << want.dump() << "\n  got  " << got.dump());
    }
    CHECK(matched == 60);
    CHECK(per_category.size() == 5);
    for (const auto& [cat, n] : per_category) CHECK(n == 12);
  }

  TEST_CASE("abstract and colored delete") {
    auto cs = parse_command({"Create a traffic jam.", 2});
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].action == EditAction::kAbstractExpand);
    CHECK(cs[0].round == 2);
    cs = parse_command({"Delete the red car.", 0});
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].action == EditAction::kDelete);
    CHECK(cs[0].parameters["color"] == "red");
  }

  TEST_CASE("clause splitting") {
    CHECK(split_clauses("Move the view 0.5 meters up. Delete the red car!").size() == 2);
    CHECK(split_clauses("Add a car and add a bus; then delete the truck").size() == 3);
    // "and" before a non-instruction stays inside the clause.
    CHECK(split_clauses("Add a car driving fast and chasing behind the Porsche").size() == 1);
    CHECK(code_of([] { split_clauses("  . ;"); }) == ErrorCode::kParse);
  }

  TEST_CASE("config count equals clause count and parsing is deterministic") {
    for (const std::string& cmd :
         {kMixed, std::string("Ego vehicle drives ahead slowly. Add a car to the close front that is moving ahead."),
          std::string("Add a red car; delete the Porsche. Then rotate the view 10 degrees left")}) {
      const auto a = parse_command({cmd, 1});
      CHECK(a.size() == split_clauses(cmd).size());
      CHECK(wire(a) == wire(parse_command({cmd, 1})));
      for (const auto& c : a) CHECK(c.round == 1);
    }
  }

  TEST_CASE("wire form round-trips with no violations") {
    const json corpus = load_fixture("dsl_corpus.json");
    for (const auto& item : corpus)
      for (const auto& c : parse_command({item["command"].get<std::string>(), 3})) {
        CHECK(validate_edit_config(c).empty());
        const json j = to_json(c);
        CHECK(validate_edit_config_json(j).empty());
        CHECK(edit_config_from_json(j) == c);
        CHECK(edit_config_from_json(json::parse(j.dump())) == c);
      }
  }

  TEST_CASE("unknown verb names the clause and the nearest rule") {
    try {
      parse_command({"Add a bus. Delate the red car.", 0});
      FAIL("expected kParse");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParse);
      CHECK(e.detail()["clause"] == "Delate the red car");
      CHECK(e.detail()["nearest_rule"] == "delete");
    }
    CHECK(code_of([] { parse_command({"", 0}); }) == ErrorCode::kParse);
    CHECK(code_of([] { parse_command({"Frobnicate the Porsche.", 0}); }) == ErrorCode::kParse);
  }

  TEST_CASE("canonical vehicle types") {
    CHECK(canonical_vehicle_type("porsche") == "Porsche");
    CHECK(canonical_vehicle_type("vehicle") == "car");
    CHECK(canonical_vehicle_type("trucks") == "truck");
    CHECK(!canonical_vehicle_type("banana"));
  }

  TEST_CASE("motion attribute defaults") {
    const MotionAttributes a = extract_motion_attributes(add_cfg({{"type", "car"}, {"count", 1}}));
    CHECK(a == MotionAttributes{});
    CHECK(a.speed == 8.0);
    CHECK(a.action == MotionAction::kStraight);
    CHECK(a.sector == Sector::kFront);
    CHECK(a.driving_direction == DrivingDirection::kAwayFromEgo);
    CHECK(!a.crazy_mode);
    CHECK(!a.distance_range);
  }

  TEST_CASE("motion attributes from parsed text") {
    auto one = [](const std::string& cmd) {
      const auto cs = parse_command({cmd, 0});
      REQUIRE(cs.size() == 1);
      return extract_motion_attributes(cs[0]);
    };
    CHECK(one("Add a fast car.").speed == 12.0);
    CHECK(one("Add a slow car.").speed == 4.0);
    CHECK(one("Add a car at 54 km/h.").speed == doctest::Approx(15.0).epsilon(1e-12));

    const MotionAttributes t = one("Add a car that will turn left in 20 to 30 meters.");
    CHECK(t.action == MotionAction::kTurnLeft);
    REQUIRE(t.distance_range);
    CHECK(t.distance_range->first == 20.0);
    CHECK(t.distance_range->second == 30.0);

    const MotionAttributes w = one("Add a Porsche driving the wrong way toward me fast.");
    CHECK(w.crazy_mode);
    CHECK(w.driving_direction == DrivingDirection::kTowardEgo);
    CHECK(w.speed == 12.0);

    const MotionAttributes r = one("Add a police car chasing behind the Porsche.");
    CHECK(r.relation == Relation::kBehind);
    CHECK(r.chase);
    CHECK(!r.driving_direction);

    SpeedLexicon lex;
    lex.fast = 20.0;
    CHECK(extract_motion_attributes(add_cfg({{"modifiers", {"fast"}}}), lex).speed == 20.0);
  }

  TEST_CASE("competing values are ambiguous") {
    CHECK(code_of([] { extract_motion_attributes(parse_command({"Add a fast car driving slowly.", 0})[0]); }) ==
          ErrorCode::kAmbiguity);
    CHECK(code_of([] {
            extract_motion_attributes(add_cfg({{"modifiers", {"turn left", "turn right"}}}));
          }) == ErrorCode::kAmbiguity);
    CHECK(code_of([] { extract_motion_attributes(add_cfg({{"speed", 3.0}, {"modifiers", {"fast"}}})); }) ==
          ErrorCode::kAmbiguity);
    // The same value twice is not a contradiction.
    CHECK(extract_motion_attributes(add_cfg({{"speed", 12.0}, {"modifiers", {"fast"}}})).speed == 12.0);
    EditConfig del;
    del.action = EditAction::kDelete;
    CHECK(code_of([&] { extract_motion_attributes(del); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("revise merges onto existing attributes") {
    MotionAttributes base;
    base.speed = 4.0;
    base.sector = Sector::kLeft;
    const auto cs = parse_command({"Modify the added car to turn left.", 0});
    const MotionAttributes m = merge_motion_attributes(base, cs[0]);
    CHECK(m.action == MotionAction::kTurnLeft);
    CHECK(m.speed == 4.0);
    CHECK(m.sector == Sector::kLeft);
    CHECK(has_motion_change(cs[0]));
    CHECK(!sets_speed(cs[0]));
    CHECK(sets_speed(parse_command({"Make the added bus drive slowly.", 0})[0]));
    CHECK(!has_motion_change(parse_command({"Paint the added Mini red.", 0})[0]));
    CHECK(motion_attributes_from_json(to_json(m)) == m);
  }

  TEST_CASE("reference resolution against history") {
    std::vector<EditConfig> history;
    CHECK(code_of([&] { resolve_reference("the added Porsche", history); }) == ErrorCode::kUnresolvedReference);

    history.push_back(add_cfg({{"type", "Porsche"}, {"color", "red"}, {"instance_ids", {"v1"}},
                               {"asset_types", {"Porsche"}}}));
    history.push_back(add_cfg({{"type", "car"}, {"instance_ids", {"v2"}}, {"asset_types", {"Mini"}}}));
    CHECK(resolve_reference("the added Porsche", history) == "v1");
    CHECK(resolve_reference("the Porsche", history) == "v1");
    CHECK(resolve_reference("the added red Porsche", history) == "v1");
    // "the added car" is the latest addition of any type.
    CHECK(resolve_reference("the added car", history) == "v2");
    CHECK(resolve_reference("the added Mini", history) == "v2");

    try {
      resolve_reference("the added bus", history);
      FAIL("expected kUnresolvedReference");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnresolvedReference);
      CHECK(e.detail()["candidates"].size() == 2);
    }

    EditConfig del;
    del.action = EditAction::kDelete;
    del.parameters = {{"target_ids", {"v2"}}};
    history.push_back(del);
    CHECK(resolve_reference("the added car", history) == "v1");
    CHECK(code_of([&] { resolve_reference("the added Mini", history); }) == ErrorCode::kUnresolvedReference);
  }
}

TEST_SUITE("remote_interpreter") {
  TEST_CASE("valid response equals the grammar parse") {
    const std::string body = load_fixture("remote_mixed_command.json").dump();
    FakeModel model([&](const httplib::Request&, httplib::Response& res) { res.set_content(body, "application/json"); });
    const auto remote = interpret({kMixed, 0}, model.backend());
    CHECK(remote == parse_command({kMixed, 0}));
    CHECK(model.last_request["command"] == kMixed);
    CHECK(model.last_request["prompt"] == remote_prompt());
    CHECK(model.last_request["schema"] == edit_config_json_schema());
  }

  TEST_CASE("missing action is a schema violation") {
    json body = load_fixture("remote_mixed_command.json");
    body["configs"][2].erase("action");
    FakeModel model([&](const httplib::Request&, httplib::Response& res) {
      res.set_content(body.dump(), "application/json");
    });
    try {
      remote_interpret({kMixed, 0}, model.backend());
      FAIL("expected kSchemaViolation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kSchemaViolation);
      const std::string v = e.detail()["violations"].dump();
      CHECK(v.find("configs[2]") != std::string::npos);
    }
  }

  TEST_CASE("other malformed responses") {
    std::string body;
    int status = 200;
    FakeModel model([&](const httplib::Request&, httplib::Response& res) {
      res.status = status;
      res.set_content(body, "application/json");
    });
    body = "not json";
    CHECK(code_of([&] { remote_interpret({"x", 0}, model.backend()); }) == ErrorCode::kSchemaViolation);
    body = R"({"answer": []})";
    CHECK(code_of([&] { remote_interpret({"x", 0}, model.backend()); }) == ErrorCode::kSchemaViolation);
    // A string count is not coerced.
    body = R"({"configs": [{"action": "add", "target": null, "parameters": {"count": "2"}, "round": 0}]})";
    CHECK(code_of([&] { remote_interpret({"x", 0}, model.backend()); }) == ErrorCode::kSchemaViolation);
    body = R"({"configs": []})";
    status = 500;
    CHECK(code_of([&] { remote_interpret({"x", 0}, model.backend()); }) == ErrorCode::kTransport);
  }

  TEST_CASE("unreachable endpoint") {
    const InterpreterBackend b{InterpreterBackend::Kind::kRemoteModel, "http://127.0.0.1:1/v1/interpret", 2.0};
    CHECK(code_of([&] { remote_interpret({"Add a car.", 0}, b); }) == ErrorCode::kTransport);
  }

  TEST_CASE("slow endpoint times out") {
    FakeModel model([](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(800));
      res.set_content(R"({"configs": []})", "application/json");
    });
    const auto t0 = std::chrono::steady_clock::now();
    CHECK(code_of([&] { remote_interpret({"Add a car.", 0}, model.backend(0.2)); }) == ErrorCode::kTimeout);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::milliseconds(700));
  }
}
