#include <doctest.h>

#include <atomic>
#include <fstream>
#include <future>
#include <thread>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "roadscene/image.hpp"
#include "roadscene/service.hpp"

#include <httplib.h>

using namespace roadscene;
using nlohmann::json;

namespace {

const std::string kMixed =
    "Remove all cars in the scene and add a Porsche driving the wrong way toward me fast. Additionally, add a police "
    "car also driving the wrong way and chasing behind the Porsche. The view should be moved 5 meters ahead and 0.5 "
    "meters above.";

ServiceConfig small_config() {
  ServiceConfig c{testutil::demo_scene(), testutil::demo_bank(), {}};
  c.options.render.frames = 2;
  c.options.render.width = 32;
  c.options.render.height = 24;
  c.options.render.samples = 16;
  c.options.render.probe_height = 8;
  c.options.render.probe_width = 16;
  return c;
}

struct Harness {
  SceneService service;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit Harness(ServiceConfig config = small_config()) : service(std::move(config)) {
    service.mount(server);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~Harness() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }
  std::string create(const json& body = json::object()) {
    auto r = client().Post("/sessions", body.dump(), "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 201);
    return json::parse(r->body)["session_id"];
  }
  httplib::Result command(const std::string& id, const std::string& text) {
    return client().Post("/sessions/" + id + "/commands", json{{"text", text}}.dump(), "application/json");
  }
};

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("delete through the API lands in deleted_ids") {
    Harness h;
    const std::string id = h.create();
    auto r = h.command(id, "Delete the red car.");
    REQUIRE(r);
    CHECK(r->status == 200);
    const json round = json::parse(r->body);
    CHECK(round["version"] == 1);
    CHECK(round["frames"].size() == 2);

    auto s = h.client().Get("/sessions/" + id + "/scene");
    REQUIRE(s);
    CHECK(s->status == 200);
    const json scene = json::parse(s->body);
    CHECK(scene["version"] == 1);
    const auto deleted = scene["scene"]["deleted_ids"];
    CHECK(std::find(deleted.begin(), deleted.end(), "scene_red_sedan") != deleted.end());
  }

  TEST_CASE("API round equals the library round") {
    Harness h;
    const std::string id = h.create(json{{"seed", 5}});
    auto r = h.command(id, kMixed);
    REQUIRE(r);
    REQUIRE(r->status == 200);

    SessionOptions o = small_config().options;
    o.seed = 5;
    Session local(testutil::demo_scene(), testutil::demo_bank(), o);
    local.run(kMixed);
    auto s = h.client().Get("/sessions/" + id + "/scene");
    CHECK(json::parse(s->body)["scene"] == scene_to_json(local.state()));
  }

  TEST_CASE("export after the mixed command") {
    Harness h;
    const std::string id = h.create();
    REQUIRE(h.command(id, kMixed)->status == 200);
    auto e = h.client().Get("/sessions/" + id + "/export");
    REQUIRE(e);
    CHECK(e->status == 200);
    const json doc = json::parse(e->body);
    REQUIRE(doc["vehicles"].size() == 2);
    for (const auto& v : doc["vehicles"]) {
      CHECK(v["attributes"]["origin"] == "added");
      CHECK(v["trajectory"]["samples"].size() > 1);
    }
    CHECK(doc["camera_delta"]["translation"] == json::array({5.0, 0.0, 0.5}));
    CHECK(doc["commands"] == json::array({kMixed}));
  }

  TEST_CASE("frames are served as PNG") {
    Harness h;
    const std::string id = h.create();
    REQUIRE(h.command(id, "Add a red car.")->status == 200);
    auto f = h.client().Get("/sessions/" + id + "/frames/1");
    REQUIRE(f);
    CHECK(f->status == 200);
    CHECK(f->get_header_value("Content-Type") == "image/png");
    const auto path = testutil::temp_dir("frame") / "f.png";
    std::ofstream(path, std::ios::binary) << f->body;
    const Rgb8Image img = read_png_rgb8(path);
    CHECK(img.width() == 32);
    CHECK(img.height() == 24);
    CHECK(h.client().Get("/sessions/" + id + "/frames/2")->status == 404);
  }

  TEST_CASE("two simultaneous commands give exactly one 409") {
    Harness h;
    const std::string id = h.create();
    std::promise<void> entered, release;
    auto release_future = release.get_future().share();
    std::atomic<bool> first{true};
    h.service.command_hook = [&](const std::string&) {
      if (first.exchange(false)) {
        entered.set_value();
        release_future.wait();
      }
    };
    auto a = std::async(std::launch::async, [&] { return h.command(id, "Add a red car.")->status; });
    entered.get_future().wait();
    const int b = h.command(id, "Add a bus.")->status;
    release.set_value();
    const int sa = a.get();
    CHECK(sa == 200);
    CHECK(b == 409);
  }

  TEST_CASE("error statuses") {
    Harness h;
    CHECK(h.command("s999", "Add a car.")->status == 404);
    CHECK(h.client().Get("/sessions/s999/scene")->status == 404);
    CHECK(h.client().Delete("/sessions/s999")->status == 404);

    const std::string id = h.create();
    auto bad = h.command(id, "Frobnicate the Porsche.");
    CHECK(bad->status == 422);
    const json err = json::parse(bad->body);
    CHECK(err["error"] == "parse_error");
    CHECK(err["detail"]["nearest_rule"].is_string());
    CHECK(h.command(id, "Modify the added car to turn left.")->status == 422);
    // Rejected commands leave the version untouched.
    CHECK(json::parse(h.client().Get("/sessions/" + id + "/scene")->body)["version"] == 0);

    auto no_text = h.client().Post("/sessions/" + id + "/commands", R"({"txt": 1})", "application/json");
    CHECK(no_text->status == 422);
    auto not_json = h.client().Post("/sessions/" + id + "/commands", "{", "application/json");
    CHECK(not_json->status == 422);
    auto bad_backend = h.client().Post("/sessions/" + id + "/commands",
                                       json{{"text", "Add a car."}, {"backend", "oracle"}}.dump(), "application/json");
    CHECK(bad_backend->status == 422);
    auto bad_scene = h.client().Post("/sessions", json{{"scene", {{"lane_map", 3}}}}.dump(), "application/json");
    CHECK(bad_scene->status == 422);
  }

  TEST_CASE("sessions from a scene file or document, then deleted") {
    Harness h;
    const std::string a = h.create(json{{"scene_path", (testutil::data_dir() / "demo_scene.json").string()}});
    const std::string b = h.create(json{{"scene", scene_to_json(testutil::demo_scene())}});
    CHECK(a != b);
    CHECK(h.service.session_count() == 2);
    auto d = h.client().Delete("/sessions/" + a);
    REQUIRE(d);
    CHECK(d->status == 204);
    CHECK(h.service.session_count() == 1);
    CHECK(h.client().Get("/sessions/" + a + "/scene")->status == 404);
  }
}
