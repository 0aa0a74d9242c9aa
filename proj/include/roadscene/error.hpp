#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace roadscene {

enum class ErrorCode {
  kInvalidArgument,
  kOutOfRange,
  kParse,
  kAmbiguity,
  kUnresolvedReference,
  kSchemaViolation,
  kTransport,
  kTimeout,
  kDegenerate,
  kNoFeasiblePlacement,
  kNoFeasibleDestination,
  kUnsupportedAbstraction,
  kShapeMismatch,
  kPlausibility,
  kMissingMaterial,
  kIo,
  kRoundFailed,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library. `detail` carries structured context
// (offending clause, candidate ids, failing role, ...) for the service layer.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json detail = nlohmann::json::object())
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

  nlohmann::json to_json() const;

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

}  // namespace roadscene
