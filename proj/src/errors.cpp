#include "rarehmm/errors.hpp"

namespace rarehmm {

const char* errc_name(errc code) noexcept {
  switch (code) {
    case errc::model_invalid: return "ModelInvalid";
    case errc::non_zero_row_sum: return "NonZeroRowSum";
    case errc::bad_sign: return "BadSign";
    case errc::reducible: return "Reducible";
    case errc::p_out_of_range: return "POutOfRange";
    case errc::singular_system: return "SingularSystem";
    case errc::rejection_budget_exceeded: return "RejectionBudgetExceeded";
    case errc::budget_exceeded: return "BudgetExceeded";
    case errc::incompatible_params: return "IncompatibleParams";
    case errc::all_impossible: return "AllImpossible";
    case errc::missing_reconstruction: return "MissingReconstruction";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::shape_mismatch: return "ShapeMismatch";
    case errc::empty_event: return "EmptyEvent";
    case errc::path_too_short: return "PathTooShort";
    case errc::insufficient_resolution: return "InsufficientResolution";
    case errc::config_parse: return "ConfigParse";
  }
  return "UnknownError";
}

bool is_budget_error(errc code) noexcept {
  return code == errc::rejection_budget_exceeded ||
         code == errc::budget_exceeded;
}

Error::Error(errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message),
      code_(code) {}

void fail(errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace rarehmm
