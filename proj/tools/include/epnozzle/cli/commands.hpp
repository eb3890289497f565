#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "epnozzle/cli/config.hpp"
#include "epnozzle/error.hpp"

namespace epn::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_not_converged = 3,
  exit_physics = 4,
  exit_io = 5,
};

int exit_code_for(ErrorCode code) noexcept;

/// Writes background.csv, background.svg, report.txt and manifest.txt.
void cmd_background(const RunConfig& cfg, std::ostream& log);

/// Full outer iteration. Writes field CSVs, PGM heatmaps, residual history,
/// a centreline SVG, report.txt and manifest.txt. On a structured failure the
/// report records it before the error is rethrown.
void cmd_solve(const RunConfig& cfg, std::ostream& log);

/// Re-reads the field CSVs written by `cmd_solve` and recomputes every
/// residual plus the Helmholtz round trip into verify_report.txt.
void cmd_verify(const RunConfig& cfg, std::ostream& log);

struct SweepRow {
  double amplitude = 0.0;
  std::string status;  ///< "converged" or the error code
  std::optional<ErrorCode> error;
  int outer_sweeps = 0;
  double deviation = 0.0;
  std::optional<double> ratio;  ///< previous row's deviation over this one
};

/// One solve per amplitude into out/sweep/run_<k>, run on at most
/// `thread_cap()` threads, tabulated in out/summary.csv. Returns the rows; throws
/// Error(config_error) for an empty amplitude list.
std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, std::ostream& log);

/// EP_NOZZLE_THREADS if set to a positive integer, else the hardware count.
unsigned thread_cap();

/// Hashes every file under `dir` (report bodies only, past the header) into
/// manifest.txt.
void write_manifest(const std::filesystem::path& dir);

/// Report text: a '#'-prefixed header with the timestamp, a blank line, then
/// the body. The body alone is hashed.
std::string report_body(const std::string& report_text);

}  // namespace epn::cli
