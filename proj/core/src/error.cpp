#include "epnozzle/error.hpp"

#include <array>
#include <cstdio>

namespace epn {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::subsonicity_lost: return "SubsonicityLost";
    case ErrorCode::non_positive_density: return "NonPositiveDensity";
    case ErrorCode::grid_mismatch: return "GridMismatch";
    case ErrorCode::vacuum_state: return "VacuumState";
    case ErrorCode::ellipticity_lost: return "EllipticityLost";
    case ErrorCode::ill_posed_coefficients: return "IllPosedCoefficients";
    case ErrorCode::not_converged: return "NotConverged";
    case ErrorCode::flux_not_positive: return "FluxNotPositive";
    case ErrorCode::not_divergence_free: return "NotDivergenceFree";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::degenerate_axial_velocity: return "DegenerateAxialVelocity";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

std::string format_value(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.6g", v);
  return buf.data();
}

bool is_physics_regime_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::subsonicity_lost:
    case ErrorCode::non_positive_density:
    case ErrorCode::vacuum_state:
    case ErrorCode::ellipticity_lost:
    case ErrorCode::ill_posed_coefficients:
    case ErrorCode::flux_not_positive:
    case ErrorCode::not_divergence_free:
    case ErrorCode::out_of_range:
    case ErrorCode::degenerate_axial_velocity:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

}  // namespace epn
