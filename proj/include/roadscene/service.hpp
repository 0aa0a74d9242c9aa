#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "roadscene/orchestrator.hpp"

namespace httplib {
class Server;
}

namespace roadscene {

struct ServiceConfig {
  SceneState base_scene;
  AssetBank bank;
  SessionOptions options;
};

// HTTP front end over Sessions. Routes (JSON unless noted):
//   POST   /sessions                   {scene | scene_path, seed?} -> 201 {session_id, version}
//   POST   /sessions/{id}/commands     {text, backend?}    -> 200 {version, summary, frames}
//   GET    /sessions/{id}/scene                            -> 200 {version, scene}
//   GET    /sessions/{id}/frames/{n}                       -> 200 image/png
//   GET    /sessions/{id}/export                           -> 200 placement document
//   DELETE /sessions/{id}                                  -> 204
// 404 unknown session or frame, 409 session busy, 422 rejected command or
// document (body = error JSON), 500 otherwise.
class SceneService {
 public:
  explicit SceneService(ServiceConfig config);
  ~SceneService();

  void mount(httplib::Server& server);

  // Runs inside a command while its session lock is held (tests use it to
  // keep a session busy).
  std::function<void(const std::string& session_id)> command_hook;

  std::size_t session_count() const;

 private:
  struct Entry;
  std::shared_ptr<Entry> find(const std::string& id) const;

  ServiceConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t next_id_ = 1;
};

// Blocks serving on host:port until the server is stopped.
void run_service(ServiceConfig config, const std::string& host, int port);

}  // namespace roadscene
