#pragma once

#include <stdexcept>
#include <string>

namespace rarehmm {

// Failure categories carried by Error. The CLI maps validation categories
// to exit code 2 and budget categories to exit code 3.
enum class errc {
  model_invalid,
  non_zero_row_sum,
  bad_sign,
  reducible,
  p_out_of_range,
  singular_system,
  rejection_budget_exceeded,
  budget_exceeded,
  incompatible_params,
  all_impossible,
  missing_reconstruction,
  length_mismatch,
  shape_mismatch,
  empty_event,
  path_too_short,
  insufficient_resolution,
  config_parse,
};

const char* errc_name(errc code) noexcept;
bool is_budget_error(errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message);
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] void fail(errc code, const std::string& message);

}  // namespace rarehmm
