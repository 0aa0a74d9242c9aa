#pragma once

#include <optional>
#include <string>
#include <vector>

#include "roadscene/edit_config.hpp"
#include "roadscene/motion.hpp"
#include "roadscene/scene_model.hpp"

namespace roadscene {

struct CommandText {
  std::string raw;
  int round = 0;
};

// Clause boundaries: sentence punctuation (not decimal points) and the
// connectives and / additionally / also / then when a new instruction follows.
// Throws kParse for empty text.
std::vector<std::string> split_clauses(std::string_view text);

// Grammar interpreter; one EditConfig per clause, in order. Throws kParse
// naming the offending clause and the nearest grammar rule.
std::vector<EditConfig> parse_command(const CommandText& text);

// Canonical vehicle type for a word ("porsche" -> "Porsche", "vehicle" ->
// "car"); nullopt for non-vehicle words.
std::optional<std::string> canonical_vehicle_type(std::string_view word);

struct SpeedLexicon {
  double fast = 12.0;
  double normal = 8.0;
  double slow = 4.0;
};

// Maps a config's modifiers and explicit keys onto MotionAttributes (defaults
// for absent keys). Throws kInvalidArgument for non-add configs and
// kAmbiguity when two values compete for one attribute.
MotionAttributes extract_motion_attributes(const EditConfig& config, const SpeedLexicon& lexicon = {});

// Applies a revise config's motion changes to existing attributes.
MotionAttributes merge_motion_attributes(const MotionAttributes& base, const EditConfig& config,
                                         const SpeedLexicon& lexicon = {});

// True when the config carries any movement / position change.
bool has_motion_change(const EditConfig& config);
// True when the config sets a speed (explicit key or speed word).
bool sets_speed(const EditConfig& config);

nlohmann::json to_json(const MotionAttributes& a);
MotionAttributes motion_attributes_from_json(const nlohmann::json& j);

// Resolves "the added <type>", "the added car" or "the <type>" against the
// add entries of `history` (annotated with instance_ids / asset_types);
// vehicles removed by later delete entries are skipped. Throws
// kUnresolvedReference listing the candidates.
std::string resolve_reference(std::string_view expr, const std::vector<EditConfig>& history);
// History first; for references without "added", falls back to the scene's
// own vehicles (nearest to the ego origin among type / color matches).
std::string resolve_reference(std::string_view expr, const SceneState& state);

// Type / color test against a vehicle's attributes. Generic types match any
// vehicle; colors compare by nearest color name.
bool vehicle_matches(const PlacedVehicle& v, const std::optional<std::string>& type,
                     const std::optional<std::string>& color);

struct InterpreterBackend {
  enum class Kind { kGrammar, kRemoteModel };
  Kind kind = Kind::kGrammar;
  std::string endpoint;  // http://host:port/path
  double timeout = 10.0; // s
};

// Instruction text sent with every remote request.
std::string remote_prompt();

// POSTs {prompt, command, schema} and validates the returned {configs: [...]}.
// Throws kTimeout, kTransport or kSchemaViolation. Never coerces.
std::vector<EditConfig> remote_interpret(const CommandText& text, const InterpreterBackend& backend);

// Dispatches on backend.kind.
std::vector<EditConfig> interpret(const CommandText& text, const InterpreterBackend& backend);

}  // namespace roadscene
