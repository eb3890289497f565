#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "epnozzle/background.hpp"
#include "epnozzle/solver.hpp"

namespace epn::cli {

/// Perturbation channels a sweep may drive.
enum class SweepChannel { all, potential, pressure, entropy, bernoulli, charge };

/// Tabulated inlet data (x2, S_en, B_en) replacing the cosine families.
struct InletTable {
  std::vector<double> x2, entropy, bernoulli;
};

struct RunConfig {
  BackgroundParams background = physical_defaults();
  int n1 = 128;
  int n2 = 64;
  int background_steps = 0;  ///< 0 uses n1
  Perturbation perturbation;
  SolverConfig solver;
  std::filesystem::path inlet_table;  ///< empty: cosine families
  std::vector<double> sweep_amplitudes;
  SweepChannel sweep_channel = SweepChannel::all;
  std::filesystem::path out_dir = "out";

  static BackgroundParams physical_defaults();
  /// Checks grid sizes, amplitudes, tolerances and the background invariants.
  /// Throws Error(config_error).
  void validate() const;
};

/// Parses a flat `key = value` file; `#` starts a comment. Unknown or
/// repeated keys are errors. Relative paths resolve against `base_dir`.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Every key `parse_config` accepts, in documentation order.
const std::vector<std::string>& config_keys();

/// "N1xN2" -> (n1, n2). Throws Error(config_error).
std::pair<int, int> parse_grid(std::string_view text);

/// CSV with header x2,S,B. Throws Error(config_error) on malformed rows.
InletTable read_inlet_table(const std::filesystem::path& path);

/// Perturbation of amplitude `a` restricted to `channel`.
Perturbation channel_perturbation(SweepChannel channel, double a);

}  // namespace epn::cli
