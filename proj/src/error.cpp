#include "roadscene/error.hpp"

namespace roadscene {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kAmbiguity: return "ambiguity";
    case ErrorCode::kUnresolvedReference: return "unresolved_reference";
    case ErrorCode::kSchemaViolation: return "schema_violation";
    case ErrorCode::kTransport: return "transport_error";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kNoFeasiblePlacement: return "no_feasible_placement";
    case ErrorCode::kNoFeasibleDestination: return "no_feasible_destination";
    case ErrorCode::kUnsupportedAbstraction: return "unsupported_abstraction";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kPlausibility: return "plausibility";
    case ErrorCode::kMissingMaterial: return "missing_material";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kRoundFailed: return "round_failed";
  }
  return "unknown";
}

nlohmann::json Error::to_json() const {
  return {{"error", std::string(to_string(code_))}, {"message", what()}, {"detail", detail_}};
}

}  // namespace roadscene
