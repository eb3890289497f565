#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "epnozzle/background.hpp"

namespace epn::test {

inline constexpr double kPi = 3.14159265358979323846;

/// gamma = 2, p_hat = c_v = 1, S0 = 0, b0 = J0 = rho0 = 1, E0 = 0, L = 1.
inline BackgroundParams fixture_params() {
  BackgroundParams p;
  p.gamma = 2.0;
  return p;
}

/// Non-trivial subsonic background used by the solver tests.
inline BackgroundParams physical_params() {
  BackgroundParams p;
  p.gamma = 1.4;
  p.rho0 = 1.2;
  p.e0 = 0.1;
  return p;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("epnozzle_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// log2 of an error ratio between successive refinements.
inline double order(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace epn::test
