#pragma once

#include <stdexcept>
#include <string>

namespace epn {

/// Failure classes raised by the solver suite. The CLI maps them onto exit codes.
enum class ErrorCode {
  invalid_argument,
  subsonicity_lost,
  non_positive_density,
  grid_mismatch,
  vacuum_state,
  ellipticity_lost,
  ill_posed_coefficients,
  not_converged,
  flux_not_positive,
  not_divergence_free,
  out_of_range,
  degenerate_axial_velocity,
  config_error,
  io_error,
};

const char* to_string(ErrorCode code) noexcept;

/// Short %g rendering of a number for diagnostics.
std::string format_value(double v);

/// True for errors that mean the flow left the admissible subsonic regime.
bool is_physics_regime_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix carried by what().
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace epn
