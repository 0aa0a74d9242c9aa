#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "roadscene/error.hpp"
#include "roadscene/image.hpp"
#include "roadscene/orchestrator.hpp"
#include "roadscene/scene_io.hpp"
#include "roadscene/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace roadscene;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

// One entry per non-empty, non-comment line, with its 1-based line number.
std::vector<std::pair<int, std::string>> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::pair<int, std::string>> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.emplace_back(n, line.substr(b, e - b + 1));
  }
  return out;
}

struct Common {
  std::string scene = std::string(ROADSCENE_DATA_DIR) + "/demo_scene.json";
  std::string bank = env_or("ROADSCENE_ASSET_BANK", std::string(ROADSCENE_DATA_DIR) + "/asset_bank.json");
  std::uint64_t seed = 0;
  std::string remote;
  double remote_timeout = 10.0;
  int frames = 40;
  int width = 160;
  int height = 96;
  int samples = 96;

  SessionOptions options() const {
    SessionOptions o;
    o.seed = seed;
    o.render.frames = frames;
    o.render.width = width;
    o.render.height = height;
    o.render.samples = samples;
    if (!remote.empty()) {
      o.backend.kind = InterpreterBackend::Kind::kRemoteModel;
      o.backend.endpoint = remote;
      o.backend.timeout = remote_timeout;
    }
    return o;
  }
};

void add_common(CLI::App* app, Common& c, bool render_flags) {
  app->add_option("--scene", c.scene, "scene JSON")->capture_default_str();
  app->add_option("--bank", c.bank, "asset bank JSON (env ROADSCENE_ASSET_BANK)")->capture_default_str();
  app->add_option("--seed", c.seed, "placement seed")->capture_default_str();
  app->add_option("--remote", c.remote, "remote interpreter endpoint (http://host:port/path)");
  app->add_option("--remote-timeout", c.remote_timeout, "seconds")->capture_default_str();
  if (render_flags) {
    app->add_option("--frames", c.frames, "frames per round")->capture_default_str();
    app->add_option("--width", c.width)->capture_default_str();
    app->add_option("--height", c.height)->capture_default_str();
    app->add_option("--samples", c.samples, "volume samples per ray")->capture_default_str();
  }
}

void report(int round, int line, const Error& e) {
  std::cerr << "round " << round << " (line " << line << "): " << e.what() << "\n"
            << "  " << e.to_json().dump() << "\n";
}

int cmd_run(const Common& c, const std::string& commands, const std::string& out_dir, bool render) {
  SessionOptions options = c.options();
  options.render_frames = render;
  Session session(load_scene(c.scene), AssetBank::load(c.bank), options);
  const fs::path out(out_dir);
  fs::create_directories(out / "frames");
  json manifest = {{"scene", c.scene}, {"bank", c.bank}, {"seed", c.seed}, {"rounds", json::array()}};
  bool ok = true;
  int round = 0;
  for (const auto& [line, text] : read_lines(commands)) {
    ++round;
    json entry = {{"round", round}, {"line", line}, {"command", text}};
    try {
      RoundResult rr = session.run(text);
      json files = json::array();
      for (std::size_t i = 0; i < rr.frames.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "round%02d_%03zu.png", round, i);
        write_png(out / "frames" / name, rr.frames[i]);
        files.push_back(std::string("frames/") + name);
      }
      entry["status"] = "ok";
      entry["summary"] = rr.summary;
      entry["frames"] = files;
      std::cout << "round " << round << ": ok, " << rr.summary.value("vehicles", 0) << " vehicles, "
                << rr.frames.size() << " frames\n";
    } catch (const Error& e) {
      ok = false;
      entry["status"] = "failed";
      entry["error"] = e.to_json();
      report(round, line, e);
    }
    manifest["rounds"].push_back(entry);
  }
  write_json_file(out / "manifest.json", manifest);
  json doc = export_placements(session.state());
  doc["commands"] = session.commands();
  write_json_file(out / "export.json", doc);
  return ok ? 0 : 1;
}

int cmd_plan(const Common& c, const std::string& commands) {
  SessionOptions options = c.options();
  options.render_frames = false;
  Session session(load_scene(c.scene), AssetBank::load(c.bank), options);
  json rounds = json::array();
  bool ok = true;
  int round = 0;
  for (const auto& [line, text] : read_lines(commands)) {
    ++round;
    try {
      const WorkOrder order = session.plan(text);
      json r = order.to_json();
      json exec = json::array();
      for (AgentRole role : order.execution_order()) exec.push_back(std::string(to_string(role)));
      r["execution_order"] = exec;
      r["round"] = round;
      r["command"] = text;
      rounds.push_back(r);
      session.run(text);  // later rounds plan against the edited scene
    } catch (const Error& e) {
      ok = false;
      report(round, line, e);
    }
  }
  std::cout << json{{"rounds", rounds}}.dump(2) << "\n";
  return ok ? 0 : 1;
}

int cmd_lint(const std::string& corpus) {
  int bad = 0;
  int checked = 0;
  for (const auto& [line, text] : read_lines(corpus)) {
    ++checked;
    try {
      parse_command({text, 1});
    } catch (const Error& e) {
      ++bad;
      std::cerr << corpus << ":" << line << ": " << e.what() << "\n";
    }
  }
  std::cout << checked - bad << "/" << checked << " commands parse\n";
  return bad == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language-driven editing of multi-camera driving scenes"};
  app.require_subcommand(1);

  Common common;
  std::string commands;
  std::string out_dir = "out";

  auto* run = app.add_subcommand("run", "execute command rounds, write frames, manifest and export");
  add_common(run, common, true);
  run->add_option("--commands", commands, "one round per line")->required();
  run->add_option("--out", out_dir)->capture_default_str();
  bool no_render = false;
  run->add_flag("--no-render", no_render, "skip frame rendering");

  auto* plan = app.add_subcommand("plan", "print work orders without rendering");
  add_common(plan, common, false);
  plan->add_option("--commands", commands, "one round per line")->required();

  std::string corpus;
  auto* lint = app.add_subcommand("lint-dsl", "check that every line of a corpus parses");
  lint->add_option("corpus", corpus)->required();

  std::string host = "127.0.0.1";
  int port = std::stoi(env_or("ROADSCENE_PORT", "8080"));
  auto* serve = app.add_subcommand("serve", "HTTP session service");
  add_common(serve, common, true);
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port, "env ROADSCENE_PORT")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(common, commands, out_dir, !no_render);
    if (*plan) return cmd_plan(common, commands);
    if (*lint) return cmd_lint(corpus);
    if (*serve) {
      ServiceConfig config{load_scene(common.scene), AssetBank::load(common.bank), common.options()};
      std::cout << "listening on " << host << ":" << port << "\n" << std::flush;
      run_service(std::move(config), host, port);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n" << e.to_json().dump() << "\n";
    return 2;
  }
  return 0;
}
