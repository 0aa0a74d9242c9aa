#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include "roadscene/asset_bank.hpp"
#include "roadscene/scene_io.hpp"
#include "roadscene/scene_model.hpp"

namespace testutil {

inline std::filesystem::path data_dir() { return ROADSCENE_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return ROADSCENE_FIXTURE_DIR; }

inline roadscene::SceneState demo_scene() {
  static const roadscene::SceneState s = roadscene::load_scene(data_dir() / "demo_scene.json");
  return s;
}

inline roadscene::AssetBank demo_bank() {
  static const roadscene::AssetBank b = roadscene::AssetBank::load(data_dir() / "asset_bank.json");
  return b;
}

// Straight lane along +x at lateral offset y, nodes of length `step`.
inline void add_lane(roadscene::LaneMap& m, double x0, double x1, double y, double step = 2.0, bool reverse = false) {
  for (double x = x0; x + step <= x1 + 1e-9; x += step) {
    roadscene::LaneNode n{{x, y}, {x + step, y}, roadscene::LaneType::kCenterline};
    m.nodes.push_back(reverse ? n.reversed() : n);
  }
}

// Fresh unique directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static int counter = 0;
  auto p = std::filesystem::temp_directory_path() /
           ("roadscene_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
