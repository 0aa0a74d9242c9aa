#include "roadscene/edit_config.hpp"

#include <algorithm>
#include <array>
#include <initializer_list>

#include "roadscene/error.hpp"

namespace roadscene {
namespace {

enum class Kind { kString, kNumber, kInteger, kBool, kStringArray };

struct KeySpec {
  const char* name;
  Kind kind;
  std::initializer_list<EditAction> actions;
  std::initializer_list<const char*> allowed;  // empty = any value
};

constexpr auto kAdd = EditAction::kAdd;
constexpr auto kDel = EditAction::kDelete;
constexpr auto kView = EditAction::kViewChange;
constexpr auto kRev = EditAction::kRevise;
constexpr auto kAbs = EditAction::kAbstractExpand;

// The command schema. Every key accepted in EditConfig.parameters is listed
// here with the actions that may carry it.
const std::array<KeySpec, 31>& schema() {
  static const std::array<KeySpec, 31> keys = {{
      {param::kType, Kind::kString, {kAdd, kDel, kRev}, {}},
      {param::kColor, Kind::kString, {kAdd, kDel, kRev}, {}},
      {param::kCount, Kind::kInteger, {kAdd, kAbs}, {}},
      {param::kCrazyMode, Kind::kBool, {kAdd, kRev}, {}},
      {param::kDrivingDirection, Kind::kString, {kAdd, kRev}, {"toward_ego", "away_from_ego"}},
      {param::kSector,
       Kind::kString,
       {kAdd, kDel},
       {"front", "left_front", "right_front", "left", "right", "back"}},
      {param::kDistanceMin, Kind::kNumber, {kAdd, kRev}, {}},
      {param::kDistanceMax, Kind::kNumber, {kAdd, kRev}, {}},
      {param::kSpeed, Kind::kNumber, {kAdd, kRev}, {}},
      {param::kMotion,
       Kind::kString,
       {kAdd, kRev},
       {"straightforward", "turn_left", "turn_right", "park", "backward"}},
      {param::kDuration, Kind::kNumber, {kAdd, kRev}, {}},
      {param::kRelation, Kind::kString, {kAdd}, {"front", "behind", "left", "right"}},
      {param::kReference, Kind::kString, {kAdd, kDel, kRev}, {}},
      {param::kChase, Kind::kBool, {kAdd}, {}},
      {param::kAnchorX, Kind::kNumber, {kAdd}, {}},
      {param::kAnchorY, Kind::kNumber, {kAdd}, {}},
      {param::kInstanceIds, Kind::kStringArray, {kAdd}, {}},
      {param::kAssetIds, Kind::kStringArray, {kAdd}, {}},
      {param::kAssetTypes, Kind::kStringArray, {kAdd}, {}},
      {param::kTargetIds, Kind::kStringArray, {kDel, kRev}, {}},
      {param::kReferenceId, Kind::kString, {kAdd}, {}},
      {param::kScope, Kind::kString, {kDel}, {"all", "match"}},
      {param::kForward, Kind::kNumber, {kView}, {}},
      {param::kLeft, Kind::kNumber, {kView}, {}},
      {param::kUp, Kind::kNumber, {kView}, {}},
      {param::kYawDeg, Kind::kNumber, {kView}, {}},
      {param::kPitchDeg, Kind::kNumber, {kView}, {}},
      {param::kRollDeg, Kind::kNumber, {kView}, {}},
      {param::kEgoSpeed, Kind::kNumber, {kView}, {}},
      {param::kPhrase, Kind::kString, {kAbs}, {}},
      {param::kModifiers, Kind::kStringArray, {kAdd, kRev, kView}, {}},
  }};
  return keys;
}

const KeySpec* find_key(std::string_view name) {
  for (const KeySpec& k : schema())
    if (name == k.name) return &k;
  return nullptr;
}

bool kind_matches(Kind kind, const nlohmann::json& v) {
  switch (kind) {
    case Kind::kString: return v.is_string();
    case Kind::kNumber: return v.is_number() && std::isfinite(v.get<double>());
    case Kind::kInteger: return v.is_number_integer();
    case Kind::kBool: return v.is_boolean();
    case Kind::kStringArray:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const nlohmann::json& e) { return e.is_string(); });
  }
  return false;
}

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::kString: return "string";
    case Kind::kNumber: return "number";
    case Kind::kInteger: return "integer";
    case Kind::kBool: return "boolean";
    case Kind::kStringArray: return "array of strings";
  }
  return "?";
}

std::vector<Violation> validate_parameters(EditAction action, const nlohmann::json& params, const std::string& path) {
  std::vector<Violation> out;
  if (!params.is_object()) {
    out.push_back({path, "type", "parameters must be an object"});
    return out;
  }
  for (auto it = params.begin(); it != params.end(); ++it) {
    const std::string field = path + "." + it.key();
    const KeySpec* spec = find_key(it.key());
    if (!spec) {
      out.push_back({field, "unknown_key", "key '" + it.key() + "' is not part of the command schema"});
      continue;
    }
    if (std::find(spec->actions.begin(), spec->actions.end(), action) == spec->actions.end()) {
      out.push_back({field, "key_not_allowed",
                     "key '" + it.key() + "' is not allowed for action '" + std::string(to_string(action)) + "'"});
      continue;
    }
    if (!kind_matches(spec->kind, it.value())) {
      out.push_back({field, "type", "expected " + std::string(kind_name(spec->kind))});
      continue;
    }
    if (spec->allowed.size() > 0) {
      const std::string v = it.value().get<std::string>();
      bool ok = std::any_of(spec->allowed.begin(), spec->allowed.end(), [&](const char* a) { return v == a; });
      if (!ok) out.push_back({field, "enum", "value '" + v + "' is not allowed"});
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(EditAction a) {
  switch (a) {
    case EditAction::kAdd: return "add";
    case EditAction::kDelete: return "delete";
    case EditAction::kViewChange: return "view_change";
    case EditAction::kRevise: return "revise";
    case EditAction::kAbstractExpand: return "abstract_expand";
  }
  return "?";
}

std::optional<EditAction> edit_action_from_string(std::string_view s) {
  for (EditAction a : {EditAction::kAdd, EditAction::kDelete, EditAction::kViewChange, EditAction::kRevise,
                       EditAction::kAbstractExpand})
    if (s == to_string(a)) return a;
  return std::nullopt;
}

nlohmann::json to_json(const EditConfig& c) {
  nlohmann::json j;
  j["action"] = std::string(to_string(c.action));
  j["target"] = c.target ? nlohmann::json(*c.target) : nlohmann::json(nullptr);
  j["parameters"] = c.parameters;
  j["round"] = c.round;
  return j;
}

std::vector<Violation> validate_edit_config_json(const nlohmann::json& j, std::string_view path_view) {
  const std::string path(path_view);
  std::vector<Violation> out;
  if (!j.is_object()) {
    out.push_back({path, "type", "config must be an object"});
    return out;
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "action" && it.key() != "target" && it.key() != "parameters" && it.key() != "round")
      out.push_back({path + "." + it.key(), "unknown_key", "key '" + it.key() + "' is not part of EditConfig"});
  }
  std::optional<EditAction> action;
  if (!j.contains("action")) {
    out.push_back({path + ".action", "required", "missing required key 'action'"});
  } else if (!j["action"].is_string() || !(action = edit_action_from_string(j["action"].get<std::string>()))) {
    out.push_back({path + ".action", "enum", "action must be one of add, delete, view_change, revise, abstract_expand"});
  }
  if (!j.contains("round")) {
    out.push_back({path + ".round", "required", "missing required key 'round'"});
  } else if (!j["round"].is_number_integer() || j["round"].get<long long>() < 0) {
    out.push_back({path + ".round", "type", "round must be a non-negative integer"});
  }
  if (j.contains("target") && !j["target"].is_null() && !j["target"].is_string())
    out.push_back({path + ".target", "type", "target must be a string or null"});
  if (!j.contains("parameters")) {
    out.push_back({path + ".parameters", "required", "missing required key 'parameters'"});
  } else if (action) {
    auto v = validate_parameters(*action, j["parameters"], path + ".parameters");
    out.insert(out.end(), v.begin(), v.end());
  } else if (!j["parameters"].is_object()) {
    out.push_back({path + ".parameters", "type", "parameters must be an object"});
  }
  return out;
}

std::vector<Violation> validate_edit_config(const EditConfig& c, std::string_view path) {
  return validate_edit_config_json(to_json(c), path);
}

EditConfig edit_config_from_json(const nlohmann::json& j) {
  auto violations = validate_edit_config_json(j);
  if (!violations.empty()) {
    nlohmann::json keys = nlohmann::json::array();
    std::string message = "EditConfig schema violation:";
    for (const auto& v : violations) {
      keys.push_back({{"field", v.field}, {"rule", v.rule}, {"message", v.message}});
      message += " " + v.field + " (" + v.rule + ")";
    }
    throw Error(ErrorCode::kSchemaViolation, message, {{"violations", keys}});
  }
  EditConfig c;
  c.action = *edit_action_from_string(j["action"].get<std::string>());
  if (j.contains("target") && j["target"].is_string()) c.target = j["target"].get<std::string>();
  c.parameters = j["parameters"];
  c.round = j["round"].get<int>();
  return c;
}

nlohmann::json edit_config_json_schema() {
  nlohmann::json props = nlohmann::json::object();
  for (const KeySpec& k : schema()) {
    nlohmann::json p;
    switch (k.kind) {
      case Kind::kString: p["type"] = "string"; break;
      case Kind::kNumber: p["type"] = "number"; break;
      case Kind::kInteger: p["type"] = "integer"; break;
      case Kind::kBool: p["type"] = "boolean"; break;
      case Kind::kStringArray:
        p["type"] = "array";
        p["items"] = {{"type", "string"}};
        break;
    }
    if (k.allowed.size() > 0) {
      p["enum"] = nlohmann::json::array();
      for (const char* a : k.allowed) p["enum"].push_back(a);
    }
    nlohmann::json actions = nlohmann::json::array();
    for (EditAction a : k.actions) actions.push_back(std::string(to_string(a)));
    p["x-actions"] = actions;
    props[k.name] = p;
  }
  return {
      {"$schema", "http://json-schema.org/draft-07/schema#"},
      {"title", "EditConfig"},
      {"type", "object"},
      {"additionalProperties", false},
      {"required", {"action", "parameters", "round"}},
      {"properties",
       {{"action", {{"type", "string"}, {"enum", {"add", "delete", "view_change", "revise", "abstract_expand"}}}},
        {"target", {{"type", {"string", "null"}}}},
        {"round", {{"type", "integer"}, {"minimum", 0}}},
        {"parameters", {{"type", "object"}, {"additionalProperties", false}, {"properties", props}}}}},
  };
}

}  // namespace roadscene
