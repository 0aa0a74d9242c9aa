#include "roadscene/service.hpp"

#include <httplib.h>

#include "roadscene/error.hpp"
#include "roadscene/scene_io.hpp"

namespace roadscene {
namespace {

using nlohmann::json;

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return 500;
    case ErrorCode::kTransport: return 502;
    case ErrorCode::kTimeout: return 504;
    default: return 422;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                const json& detail = json::object()) {
  send_json(res, status, {{"error", code}, {"message", message}, {"detail", detail}});
}

// "grammar" or {"kind": "remote_model", "endpoint": ..., "timeout": ...}.
InterpreterBackend backend_from_json(const json& j, InterpreterBackend fallback) {
  const std::string kind = j.is_string() ? j.get<std::string>() : j.value("kind", "grammar");
  if (kind == "grammar") {
    fallback.kind = InterpreterBackend::Kind::kGrammar;
    return fallback;
  }
  if (kind != "remote_model")
    throw Error(ErrorCode::kSchemaViolation, "backend kind must be \"grammar\" or \"remote_model\"",
                {{"violations", json::array({{{"field", "backend.kind"}, {"rule", "enum"}, {"message", kind}}})}});
  InterpreterBackend b = fallback;
  b.kind = InterpreterBackend::Kind::kRemoteModel;
  if (j.is_object() && j.contains("endpoint")) b.endpoint = j["endpoint"].get<std::string>();
  if (j.is_object() && j.contains("timeout")) b.timeout = j["timeout"].get<double>();
  if (b.endpoint.empty())
    throw Error(ErrorCode::kSchemaViolation, "remote_model backend needs an endpoint",
                {{"violations", json::array({{{"field", "backend.endpoint"}, {"rule", "required"}, {"message", "missing"}}})}});
  return b;
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    send_error(res, 422, "parse_error", std::string("request body is not JSON: ") + e.what());
    return std::nullopt;
  }
}

}  // namespace

struct SceneService::Entry {
  std::mutex lock;
  std::unique_ptr<Session> session;
  std::uint64_t version = 0;
};

SceneService::SceneService(ServiceConfig config) : config_(std::move(config)) {}
SceneService::~SceneService() = default;

std::size_t SceneService::session_count() const {
  std::lock_guard<std::mutex> g(mutex_);
  return sessions_.size();
}

std::shared_ptr<SceneService::Entry> SceneService::find(const std::string& id) const {
  std::lock_guard<std::mutex> g(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void SceneService::mount(httplib::Server& server) {
  server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    try {
      SceneState scene = config_.base_scene;
      if (body->contains("scene")) scene = scene_from_json((*body)["scene"]);
      else if (body->contains("scene_path")) scene = load_scene((*body)["scene_path"].get<std::string>());
      SessionOptions options = config_.options;
      if (body->contains("seed")) options.seed = (*body)["seed"].get<std::uint64_t>();
      auto entry = std::make_shared<Entry>();
      entry->session = std::make_unique<Session>(std::move(scene), config_.bank, options);
      std::string id;
      {
        std::lock_guard<std::mutex> g(mutex_);
        id = "s" + std::to_string(next_id_++);
        sessions_[id] = entry;
      }
      send_json(res, 201, {{"session_id", id}, {"version", 0}});
    } catch (const Error& e) {
      send_json(res, status_for(e.code()), e.to_json());
    } catch (const json::exception& e) {
      send_error(res, 422, "schema_violation", e.what());
    }
  });

  server.Post(R"(/sessions/([^/]+)/commands)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto entry = find(id);
    if (!entry) return send_error(res, 404, "not_found", "unknown session '" + id + "'");
    auto body = parse_body(req, res);
    if (!body) return;
    if (!body->contains("text") || !(*body)["text"].is_string())
      return send_error(res, 422, "schema_violation", "body must be {\"text\": string}");
    std::unique_lock<std::mutex> guard(entry->lock, std::try_to_lock);
    if (!guard.owns_lock()) return send_error(res, 409, "busy", "session '" + id + "' is processing a command");
    try {
      if (command_hook) command_hook(id);
      InterpreterBackend backend = entry->session->options().backend;
      if (body->contains("backend")) backend = backend_from_json((*body)["backend"], backend);
      RoundResult rr = entry->session->run((*body)["text"].get<std::string>(), backend);
      ++entry->version;
      json frames = json::array();
      for (std::size_t i = 0; i < rr.frames.size(); ++i)
        frames.push_back("/sessions/" + id + "/frames/" + std::to_string(i));
      send_json(res, 200, {{"version", entry->version}, {"summary", rr.summary}, {"frames", frames}});
    } catch (const Error& e) {
      send_json(res, status_for(e.code()), e.to_json());
    } catch (const json::exception& e) {
      send_error(res, 422, "schema_violation", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  });

  server.Get(R"(/sessions/([^/]+)/scene)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto entry = find(id);
    if (!entry) return send_error(res, 404, "not_found", "unknown session '" + id + "'");
    std::lock_guard<std::mutex> guard(entry->lock);
    send_json(res, 200, {{"version", entry->version}, {"scene", scene_to_json(entry->session->state())}});
  });

  server.Get(R"(/sessions/([^/]+)/frames/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto entry = find(id);
    if (!entry) return send_error(res, 404, "not_found", "unknown session '" + id + "'");
    std::lock_guard<std::mutex> guard(entry->lock);
    const auto& frames = entry->session->frames();
    const std::size_t n = std::stoul(req.matches[2]);
    if (n >= frames.size())
      return send_error(res, 404, "not_found",
                        "frame " + std::to_string(n) + " not available (" + std::to_string(frames.size()) + " frames)");
    const auto png = encode_png(frames[n]);
    res.status = 200;
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  });

  server.Get(R"(/sessions/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto entry = find(id);
    if (!entry) return send_error(res, 404, "not_found", "unknown session '" + id + "'");
    std::lock_guard<std::mutex> guard(entry->lock);
    json doc = export_placements(entry->session->state());
    doc["commands"] = entry->session->commands();
    doc["version"] = entry->version;
    send_json(res, 200, doc);
  });

  server.Delete(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto entry = find(id);
    if (!entry) return send_error(res, 404, "not_found", "unknown session '" + id + "'");
    std::unique_lock<std::mutex> guard(entry->lock, std::try_to_lock);
    if (!guard.owns_lock()) return send_error(res, 409, "busy", "session '" + id + "' is processing a command");
    {
      std::lock_guard<std::mutex> g(mutex_);
      sessions_.erase(id);
    }
    res.status = 204;
  });
}

void run_service(ServiceConfig config, const std::string& host, int port) {
  SceneService service(std::move(config));
  httplib::Server server;
  service.mount(server);
  if (!server.listen(host, port))
    throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace roadscene
