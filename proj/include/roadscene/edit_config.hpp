#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace roadscene {

enum class EditAction { kAdd, kDelete, kViewChange, kRevise, kAbstractExpand };

std::string_view to_string(EditAction a);
std::optional<EditAction> edit_action_from_string(std::string_view s);

// One decomposed editing instruction. `parameters` may only carry keys from
// the command schema below; see docs/dsl.md.
struct EditConfig {
  EditAction action = EditAction::kAdd;
  std::optional<std::string> target;
  nlohmann::json parameters = nlohmann::json::object();
  int round = 0;

  bool operator==(const EditConfig& o) const {
    return action == o.action && target == o.target && parameters == o.parameters && round == o.round;
  }
};

struct Violation {
  std::string field;
  std::string rule;
  std::string message;
  bool operator==(const Violation&) const = default;
};

// Wire form: {"action", "target", "parameters", "round"}.
nlohmann::json to_json(const EditConfig& c);
// Validates against the schema first; throws kSchemaViolation listing every
// offending key. Never coerces.
EditConfig edit_config_from_json(const nlohmann::json& j);
std::vector<Violation> validate_edit_config_json(const nlohmann::json& j, std::string_view path = "config");
std::vector<Violation> validate_edit_config(const EditConfig& c, std::string_view path = "config");

// JSON-Schema (draft-07) document describing one EditConfig; sent to remote
// interpreters so their responses share the internal contract.
nlohmann::json edit_config_json_schema();

namespace param {
// Parameter keys of the command schema.
inline constexpr const char* kType = "type";
inline constexpr const char* kColor = "color";
inline constexpr const char* kCount = "count";
inline constexpr const char* kCrazyMode = "crazy_mode";
inline constexpr const char* kDrivingDirection = "driving_direction";
inline constexpr const char* kSector = "sector";
inline constexpr const char* kDistanceMin = "distance_min";
inline constexpr const char* kDistanceMax = "distance_max";
inline constexpr const char* kSpeed = "speed";
inline constexpr const char* kMotion = "motion";
inline constexpr const char* kDuration = "duration";
inline constexpr const char* kRelation = "relation";
inline constexpr const char* kReference = "reference";
inline constexpr const char* kChase = "chase";
inline constexpr const char* kAnchorX = "anchor_x";
inline constexpr const char* kAnchorY = "anchor_y";
inline constexpr const char* kInstanceIds = "instance_ids";
inline constexpr const char* kAssetIds = "asset_ids";
inline constexpr const char* kAssetTypes = "asset_types";
inline constexpr const char* kTargetIds = "target_ids";
inline constexpr const char* kReferenceId = "reference_id";
inline constexpr const char* kScope = "scope";
inline constexpr const char* kForward = "forward";
inline constexpr const char* kLeft = "left";
inline constexpr const char* kUp = "up";
inline constexpr const char* kYawDeg = "yaw_deg";
inline constexpr const char* kPitchDeg = "pitch_deg";
inline constexpr const char* kRollDeg = "roll_deg";
inline constexpr const char* kEgoSpeed = "ego_speed";
inline constexpr const char* kPhrase = "phrase";
inline constexpr const char* kModifiers = "modifiers";
}  // namespace param

}  // namespace roadscene
