#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadscene/asset_bank.hpp"
#include "roadscene/command_dsl.hpp"
#include "roadscene/motion.hpp"
#include "roadscene/render.hpp"
#include "roadscene/scene_model.hpp"

namespace roadscene {

// The planner itself acts as project manager; work orders list the others.
enum class AgentRole {
  kProjectManager,
  kViewAdjust,
  kVehicleDelete,
  kAssetManage,
  kVehicleMotion,
  kBackgroundRender,
  kForegroundRender,
};

std::string_view to_string(AgentRole r);

struct WorkOrder {
  std::vector<EditConfig> configs;  // annotated, command order
  std::map<AgentRole, std::vector<std::size_t>> assignments;  // role -> indices into configs
  std::vector<std::pair<AgentRole, AgentRole>> edges;         // (runs first, runs after)
  std::vector<std::string> warnings;

  bool empty() const { return assignments.empty(); }
  bool has_role(AgentRole r) const { return assignments.count(r) > 0; }
  std::vector<AgentRole> roles() const;
  // Topological order, ties broken by enum order. Throws kInvalidArgument on
  // a cycle or an edge to an unassigned role.
  std::vector<AgentRole> execution_order() const;
  nlohmann::json to_json() const;
};

// Deterministic expansion of abstract phrases. Only "traffic jam" (and its
// synonyms) is known: greedy scan of free forward lane slots.
struct AbstractPolicy {
  double spacing = 8.0;  // m between slots in one lane
  double x_min = 5.0;    // ego-frame x range of slots
  double x_max = 50.0;
  double speed = 0.5;    // m/s for the jammed vehicles
  double lateral_tolerance = 2.0;  // m; nodes closer than this share a lane
  double occupancy_margin = 1.0;   // added to half the length of existing vehicles
};

// Throws kUnsupportedAbstraction for unknown phrases. May return an empty
// list (no free slot). `round` is copied onto the produced add configs.
std::vector<EditConfig> expand_abstract(const EditConfig& config, const SceneState& state,
                                        const AbstractPolicy& policy = {});

struct SessionOptions {
  std::uint64_t seed = 0;
  RenderSettings render;
  MotionSettings motion;
  SpeedLexicon lexicon;
  AbstractPolicy abstraction;
  InterpreterBackend backend;
  bool render_frames = true;
};

// Resolves references, assigns instance ids v<round>_<k>, picks assets and
// routes each config to its roles. Does not touch the state.
WorkOrder plan_round(const SceneState& state, const std::vector<EditConfig>& configs, int round,
                     const AssetBank& bank, const SessionOptions& options = {});

struct TraceEvent {
  AgentRole role;
  std::string phase;  // "start" | "end"
  bool operator==(const TraceEvent&) const = default;
};

struct RoundResult {
  std::vector<Rgb8Image> frames;
  std::vector<TraceEvent> trace;
  std::vector<std::string> warnings;
  nlohmann::json summary;
};

// Per-(round, index) seed for placement and destination choices.
std::uint64_t round_seed(std::uint64_t seed, int round, std::size_t index);

class Session {
 public:
  Session(SceneState initial, AssetBank bank, SessionOptions options = {});

  const SceneState& state() const { return state_; }
  const SceneState& initial_state() const { return initial_; }
  const AssetBank& bank() const { return bank_; }
  const SessionOptions& options() const { return options_; }
  int rounds() const { return static_cast<int>(commands_.size()); }
  const std::vector<std::string>& commands() const { return commands_; }
  const std::vector<Rgb8Image>& frames() const { return frames_; }

  WorkOrder plan(const std::string& text) const;
  WorkOrder plan(const std::string& text, const InterpreterBackend& backend) const;
  // Runs the order on a staging copy; commits only if every role succeeds.
  // Role failures surface as kRoundFailed naming the role and config.
  RoundResult execute(const WorkOrder& order);
  // plan + execute + record the command text.
  RoundResult run(const std::string& text);
  RoundResult run(const std::string& text, const InterpreterBackend& backend);

  // Called before each role starts (tests inject faults / observe order).
  std::function<void(AgentRole)> before_role;

 private:
  SceneState initial_;
  SceneState state_;
  AssetBank bank_;
  SessionOptions options_;
  std::vector<std::string> commands_;
  std::vector<Rgb8Image> frames_;
};

// Placement document: every live vehicle with its asset and trajectory, the
// deleted ids, the ego trajectory and the accumulated camera delta.
nlohmann::json export_placements(const SceneState& state);
// Applies an exported document onto the initial scene.
SceneState import_placements(const SceneState& base, const nlohmann::json& doc);

// Re-runs recorded commands from the initial scene (frames are not rendered).
SceneState replay(const SceneState& initial, const std::vector<std::string>& commands, const AssetBank& bank,
                  SessionOptions options = {});

}  // namespace roadscene
