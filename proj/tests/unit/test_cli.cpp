#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "epnozzle/cli/commands.hpp"
#include "epnozzle/cli/config.hpp"
#include "epnozzle/error.hpp"
#include "epnozzle/io.hpp"
#include "fixtures.hpp"

using namespace epn;
using namespace epn::cli;
namespace fs = std::filesystem;

namespace {

ErrorCode parse_code(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

std::string parse_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

RunConfig small_config(const fs::path& out) {
  RunConfig cfg;
  cfg.n1 = 32;
  cfg.n2 = 16;
  cfg.perturbation = Perturbation::uniform(0.01);
  cfg.out_dir = out;
  return cfg;
}

std::string manifest_without_timing(const fs::path& dir) { return io::read_file(dir / "manifest.txt"); }

}  // namespace

TEST_CASE("config parsing: values, comments and defaults") {
  const RunConfig cfg = parse_config(
      "# comment\n"
      "gamma = 1.4   # trailing\n"
      "rho0 = 1.3\n"
      "n1 = 48\n"
      "amplitude = 0.02\n"
      "a_S = 0.0\n"
      "linear_method = bicgstab_ilut\n"
      "inner_ordering = jacobi\n"
      "debug_checks = true\n"
      "sweep_amplitudes = 0.01, 0.005\n"
      "sweep_channel = pressure\n");
  CHECK(cfg.background.gamma == 1.4);
  CHECK(cfg.background.rho0 == 1.3);
  CHECK(cfg.background.e0 == RunConfig::physical_defaults().e0);
  CHECK(cfg.n1 == 48);
  CHECK(cfg.n2 == 64);
  CHECK(cfg.perturbation.potential == 0.02);
  CHECK(cfg.perturbation.entropy == 0.0);
  CHECK(cfg.solver.linear_method == LinearMethod::bicgstab_ilut);
  CHECK_FALSE(cfg.solver.psi_first);
  CHECK(cfg.solver.debug_checks);
  CHECK(cfg.sweep_amplitudes == std::vector<double>{0.01, 0.005});
  CHECK(cfg.sweep_channel == SweepChannel::pressure);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config parsing rejects unknown, repeated and malformed entries") {
  CHECK(parse_code("bogus = 1\n") == ErrorCode::config_error);
  CHECK(parse_message("gamma = 1.4\n\nbogus = 1\n").find("line 3") != std::string::npos);
  CHECK(parse_code("gamma = 1.4\ngamma = 1.5\n") == ErrorCode::config_error);
  CHECK(parse_code("gamma\n") == ErrorCode::config_error);
  CHECK(parse_code("gamma = abc\n") == ErrorCode::config_error);
  CHECK(parse_code("n1 = 3.5\n") == ErrorCode::config_error);
  CHECK(parse_code("linear_method = cg\n") == ErrorCode::config_error);
  CHECK(parse_code("sweep_channel = velocity\n") == ErrorCode::config_error);
  CHECK(parse_code("sweep_amplitudes = 0.1,,0.2\n") == ErrorCode::config_error);
}

TEST_CASE("every documented key parses") {
  CHECK(config_keys().size() > 30);
  for (const std::string& key : config_keys()) {
    CAPTURE(key);
    CHECK(parse_message(key + " = ") .find("no value") != std::string::npos);
  }
}

TEST_CASE("validation names the violated sonic bound") {
  RunConfig cfg;
  cfg.background.rho0 = 0.5;
  try {
    cfg.validate();
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_error);
    CHECK(std::string(e.what()).find("sonic density") != std::string::npos);
  }
  cfg = RunConfig{};
  cfg.n1 = 4;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("grid strings") {
  CHECK(parse_grid("64x32") == std::pair<int, int>{64, 32});
  CHECK_THROWS_AS(parse_grid("64"), Error);
  CHECK_THROWS_AS(parse_grid("ax32"), Error);
}

TEST_CASE("inlet tables") {
  const auto dir = epn::test::scratch_dir("cli_table");
  io::write_file_atomic(dir / "t.csv", "x2,S,B\n0,0,3\n0.5,0.01,3.01\n1,0.02,3.02\n");
  const InletTable t = read_inlet_table(dir / "t.csv");
  CHECK(t.x2.size() == 3);
  CHECK(t.bernoulli[2] == 3.02);
  io::write_file_atomic(dir / "bad.csv", "x2,S\n0,0\n");
  CHECK_THROWS_AS(read_inlet_table(dir / "bad.csv"), Error);
  const RunConfig cfg = parse_config("inlet_table = t.csv\n", dir);
  CHECK(cfg.inlet_table == dir / "t.csv");
}

TEST_CASE("channel perturbations isolate one family") {
  const Perturbation p = channel_perturbation(SweepChannel::entropy, 0.3);
  CHECK(p.entropy == 0.3);
  CHECK(p.potential == 0.0);
  CHECK(p.charge == 0.0);
  CHECK(channel_perturbation(SweepChannel::all, 0.2).charge == 0.2);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ErrorCode::config_error) == exit_config);
  CHECK(exit_code_for(ErrorCode::invalid_argument) == exit_config);
  CHECK(exit_code_for(ErrorCode::not_converged) == exit_not_converged);
  CHECK(exit_code_for(ErrorCode::vacuum_state) == exit_physics);
  CHECK(exit_code_for(ErrorCode::subsonicity_lost) == exit_physics);
  CHECK(exit_code_for(ErrorCode::io_error) == exit_io);
}

TEST_CASE("report bodies drop the timestamp header") {
  CHECK(report_body("# a\n# b\n\nx: 1\n") == "x: 1\n");
  CHECK(report_body("x: 1\n") == "x: 1\n");
}

TEST_CASE("background command on the constant state gives flat profiles") {
  const auto dir = epn::test::scratch_dir("cli_bg");
  RunConfig cfg;
  cfg.background = epn::test::fixture_params();
  cfg.n1 = 16;
  cfg.out_dir = dir;
  std::ostringstream log;
  cmd_background(cfg, log);
  std::ifstream in(dir / "background.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string x1, rho, u;
    std::getline(ss, x1, ',');
    std::getline(ss, rho, ',');
    std::getline(ss, u, ',');
    CHECK(std::stod(rho) == 1.0);
    CHECK(std::stod(u) == 1.0);
  }
  CHECK(fs::exists(dir / "background.svg"));
  CHECK(fs::exists(dir / "manifest.txt"));
}

TEST_CASE("solve is deterministic and verify recomputes the residuals") {
  const auto a = epn::test::scratch_dir("cli_solve_a"), b = epn::test::scratch_dir("cli_solve_b");
  std::ostringstream log;
  cmd_solve(small_config(a), log);
  cmd_solve(small_config(b), log);
  CHECK(manifest_without_timing(a) == manifest_without_timing(b));
  for (const char* f : {"fields/rho.csv", "fields/Psi.csv", "heatmaps/p.pgm", "residual_history.csv",
                        "centerline.svg", "report.txt"})
    CHECK(fs::exists(a / f));
  const std::string report = report_body(io::read_file(a / "report.txt"));
  CHECK(report.find("status: converged") != std::string::npos);
  cmd_verify(small_config(a), log);
  CHECK(fs::exists(a / "verify_report.txt"));
}

TEST_CASE("zero amplitude solve stays at the background") {
  const auto dir = epn::test::scratch_dir("cli_zero");
  RunConfig cfg = small_config(dir);
  cfg.perturbation = Perturbation{};
  std::ostringstream log;
  cmd_solve(cfg, log);
  const std::string report = report_body(io::read_file(dir / "report.txt"));
  CHECK(report.find("deviation_within_10_outer_tol: true") != std::string::npos);
}

TEST_CASE("failed solves leave a failure report and rethrow") {
  const auto dir = epn::test::scratch_dir("cli_vacuum");
  RunConfig cfg = small_config(dir);
  cfg.perturbation = Perturbation::uniform(0.6);
  std::ostringstream log;
  try {
    cmd_solve(cfg, log);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(exit_code_for(e.code()) == exit_physics);
  }
  CHECK(report_body(io::read_file(dir / "report.txt")).find("status: failed") != std::string::npos);
}

TEST_CASE("sweep: empty, single and two-amplitude tables") {
  const auto dir = epn::test::scratch_dir("cli_sweep");
  RunConfig cfg = small_config(dir);
  std::ostringstream log;
  CHECK_THROWS_AS(cmd_sweep(cfg, log), Error);

  cfg.sweep_amplitudes = {0.01};
  std::vector<SweepRow> rows = cmd_sweep(cfg, log);
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].ratio.has_value());

  cfg.sweep_amplitudes = {0.01, 0.005};
  rows = cmd_sweep(cfg, log);
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[1].ratio.has_value());
  CHECK(*rows[1].ratio >= 1.8);
  CHECK(*rows[1].ratio <= 2.2);
  CHECK(io::read_file(dir / "summary.csv").rfind("amplitude,status,outer_sweeps,deviation,ratio\n", 0) == 0);
}
