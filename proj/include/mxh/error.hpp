#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mxh {

enum class ErrorCode {
  invalid_grid,
  invalid_field,
  grid_mismatch,
  unsolvable_on_torus,
  constraint_violation,
  step_size,
  feature_not_enabled,
  invalid_polarization,
  invalid_source,
  dimension_mismatch,
  wrong_mode,
  precondition,
  wrong_chart,
  blow_up,
  unknown_scenario,
  invalid_config,
  io,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` tells the failure class apart.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mxh
