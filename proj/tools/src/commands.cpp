#include "epnozzle/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <limits>
#include <sstream>
#include <thread>

#include "epnozzle/io.hpp"
#include "epnozzle/solver.hpp"

namespace epn::cli {

namespace fs = std::filesystem;

namespace {

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// key: value lines with round-trippable numbers.
class ReportBody {
 public:
  void add(const std::string& key, const std::string& value) { text_ += key + ": " + value + "\n"; }
  void add(const std::string& key, const char* value) { add(key, std::string(value)); }
  void add(const std::string& key, double value) { add(key, io::format_double(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, value ? "true" : "false"); }
  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

void write_report(const fs::path& path, const std::string& command, double seconds,
                  const ReportBody& body) {
  io::write_file_atomic(path, "# ep-nozzle " + command + "\n# generated: " + timestamp() +
                                  "\n# wall_seconds: " + format_value(seconds) + "\n\n" +
                                  body.text());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void echo_config(const RunConfig& cfg, ReportBody& body) {
  const BackgroundParams& p = cfg.background;
  body.add("grid", std::to_string(cfg.n1) + "x" + std::to_string(cfg.n2));
  body.add("gamma", p.gamma);
  body.add("p_hat", p.p_hat);
  body.add("c_v", p.c_v);
  body.add("s0", p.s0);
  body.add("j0", p.j0);
  body.add("b0", p.b0);
  body.add("rho0", p.rho0);
  body.add("e0", p.e0);
  body.add("length", p.length);
  const Perturbation& a = cfg.perturbation;
  body.add("a_phi", a.potential);
  body.add("a_p", a.pressure);
  body.add("a_S", a.entropy);
  body.add("a_B", a.bernoulli);
  body.add("a_b", a.charge);
  body.add("phi_entrance_weight", a.potential_entrance_weight);
  body.add("phi_exit_weight", a.potential_exit_weight);
  body.add("inlet_table", cfg.inlet_table.empty() ? std::string("none")
                                                  : cfg.inlet_table.filename().string());
  const SolverConfig& s = cfg.solver;
  body.add("inner_tol", s.inner_tol);
  body.add("outer_tol", s.outer_tol);
  body.add("max_outer", s.max_outer);
  body.add("linear_method", s.linear_method == LinearMethod::direct_lu ? "direct_lu" : "bicgstab_ilut");
  body.add("inner_ordering", s.psi_first ? "psi_first" : "jacobi");
  body.add("damping", s.damping);
  body.add("growth_multiple", s.growth_multiple);
}

BoundaryData make_boundary(const RunConfig& cfg, const BaseState& base) {
  BoundaryData bd = BoundaryData::from_perturbation(base, cfg.perturbation);
  if (!cfg.inlet_table.empty()) {
    const InletTable t = read_inlet_table(cfg.inlet_table);
    try {
      bd.set_inlet_tables(base, t.x2, t.entropy, t.bernoulli);
    } catch (const Error& e) {
      throw Error(ErrorCode::config_error, cfg.inlet_table.string() + ": " + e.message());
    }
  }
  return bd;
}

std::string history_csv(const OuterReport& rep) {
  std::string out =
      "sweep,change,theta,deviation,inner_sweeps,inner_change,inner_ratio,inner_roundoff_limited,"
      "linear_residual,poisson_residual,nu_star,clamp_count\n";
  for (const OuterSweep& s : rep.history) {
    out += std::to_string(s.sweep) + "," + io::format_double(s.change) + "," +
           io::format_double(s.theta) + "," + io::format_double(s.deviation) + "," +
           std::to_string(s.inner_sweeps) + "," + io::format_double(s.inner_change) + "," +
           io::format_double(s.inner_ratio) + "," + (s.inner_roundoff_limited ? "1" : "0") + "," +
           io::format_double(s.linear_residual) + "," + io::format_double(s.poisson_residual) + "," +
           io::format_double(s.nu_star) + "," + std::to_string(s.clamp_count) + "\n";
  }
  return out;
}

void add_outer_report(const OuterReport& rep, ReportBody& body) {
  body.add("outer_converged", rep.converged);
  body.add("outer_sweeps", rep.sweeps);
  body.add("sigma", rep.sigma);
  body.add("coercivity_nu3", rep.coercivity);
  body.add("growth_guard_tripped", rep.growth_guard_tripped);
  body.add("inlet_smooth", rep.inlet_smooth);
  body.add("level_set_defect", rep.level_set_defect);
  body.add("inversion_residual", rep.inversion_residual);
  body.add("max_inner_contraction", rep.max_inner_ratio);
  body.add("quadrature_defect", rep.quadrature_defect);
}

void add_verify_report(const VerifyReport& v, ReportBody& body) {
  auto norm = [&](const std::string& name, const ResidualNorm& r) {
    body.add("residual_" + name + "_sup", r.sup);
    body.add("residual_" + name + "_l2", r.l2);
    body.add("residual_" + name + "_interior", r.interior);
  };
  norm("mass", v.mass);
  norm("momentum1", v.momentum1);
  norm("momentum2", v.momentum2);
  norm("bernoulli_transport", v.bernoulli_transport);
  norm("poisson", v.poisson);
  norm("vorticity", v.vorticity);
  body.add("exit_pressure_mismatch", v.exit_pressure);
  body.add("mass_flux_drift", v.mass_flux_drift);
  body.add("subsonic_margin", v.subsonic_margin);
  body.add("pseudo_bernoulli_identity", v.pseudo_identity);
  body.add("gauge_phi_anchor", v.gauge);
}

double helmholtz_error(const VectorField& uv, const PoissonOperator& poisson) {
  const Decomposition d = decompose_velocity(uv, poisson);
  const VectorField gp = gradient(d.phi), rp = perp_gradient(d.psi);
  return std::max(sup_norm(gp.c1 + rp.c1 - uv.c1), sup_norm(gp.c2 + rp.c2 - uv.c2));
}

void record_failure(const fs::path& dir, const std::string& command, const Error& e,
                    double seconds, ReportBody body) {
  body.add("status", "failed");
  body.add("error_code", to_string(e.code()));
  body.add("error_message", e.message());
  write_report(dir / "report.txt", command, seconds, body);
  write_manifest(dir);
}

struct SolveSummary {
  int outer_sweeps = 0;
  double deviation = 0.0;
};

/// Runs one solve into cfg.out_dir; rethrows structured failures after
/// recording them.
SolveSummary solve_into(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = cfg.out_dir;
  ensure_dir(dir);
  ReportBody head;
  head.add("command", "solve");
  echo_config(cfg, head);

  std::optional<NozzleSolver> solver;
  std::optional<BoundaryData> bd;
  std::optional<SolveResult> solved;
  try {
    solver.emplace(BaseState::build(cfg.background, cfg.n1, cfg.n2), cfg.solver);
    bd.emplace(make_boundary(cfg, solver->base()));
    solved.emplace(solver->outer_iterate(*bd));
  } catch (const SolverNotConverged& e) {
    io::write_file_atomic(dir / "residual_history.csv", history_csv(e.report()));
    ReportBody body = head;
    add_outer_report(e.report(), body);
    record_failure(dir, "solve", e, seconds_since(t0), body);
    throw;
  } catch (const Error& e) {
    record_failure(dir, "solve", e, seconds_since(t0), head);
    throw;
  }

  const SolveResult& result = *solved;
  const BaseState& base = solver->base();
  const Grid2D& g = base.grid;
  const PrimitiveState& ps = result.primitives;
  const VerifyReport v = verify_solution(base, ps, *bd);
  const double deviation = primitive_deviation(ps, base.fields);
  const double helmholtz = helmholtz_error(VectorField(ps.u, ps.v), solver->poisson());

  const std::vector<std::pair<std::string, const ScalarField*>> fields{
      {"rho", &ps.rho},        {"u", &ps.u},          {"v", &ps.v},
      {"p", &ps.p},            {"Phi", &ps.potential}, {"S", &ps.entropy},
      {"K", &ps.pseudo},       {"Psi", &result.u.potential}, {"phi", &result.u.phi},
      {"psi", &result.u.psi}};
  for (const auto& [name, field] : fields) {
    io::write_field_csv(*field, dir / "fields" / (name + ".csv"));
    io::write_field_pgm(*field, dir / "heatmaps" / (name + ".pgm"));
  }
  io::write_file_atomic(dir / "residual_history.csv", history_csv(result.report));

  const int mid = g.n2() / 2;
  std::vector<double> x1(static_cast<std::size_t>(g.nx()));
  for (int i = 0; i < g.nx(); ++i) x1[static_cast<std::size_t>(i)] = g.x1(i);
  io::write_file_atomic(dir / "centerline.svg",
                        io::svg_line_chart("centreline x2 = " + format_value(g.x2(mid)), x1,
                                           {{"rho", ps.rho.row(mid)},
                                            {"u", ps.u.row(mid)},
                                            {"p", ps.p.row(mid)},
                                            {"Phi", ps.potential.row(mid)}}));

  ReportBody body = head;
  body.add("status", "converged");
  add_outer_report(result.report, body);
  body.add("deviation", deviation);
  body.add("deviation_within_10_outer_tol", deviation <= 10.0 * cfg.solver.outer_tol);
  body.add("min_axial_velocity", ps.min_axial_velocity);
  body.add("axial_velocity_positive", ps.axial_velocity_positive);
  body.add("clamp_count", result.flow.clamp_count);
  body.add("nu_star", result.stream.nu_star);
  add_verify_report(v, body);
  body.add("helmholtz_roundtrip", helmholtz);
  write_report(dir / "report.txt", "solve", seconds_since(t0), body);
  write_manifest(dir);
  return {result.report.sweeps, deviation};
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::not_converged: return exit_not_converged;
    case ErrorCode::io_error: return exit_io;
    case ErrorCode::config_error:
    case ErrorCode::invalid_argument:
    case ErrorCode::grid_mismatch: return exit_config;
    default: return is_physics_regime_error(code) ? exit_physics : exit_config;
  }
}

unsigned thread_cap() {
  if (const char* env = std::getenv("EP_NOZZLE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string report_body(const std::string& report_text) {
  std::size_t pos = 0;
  while (pos < report_text.size() && report_text[pos] == '#') {
    const auto nl = report_text.find('\n', pos);
    if (nl == std::string::npos) return {};
    pos = nl + 1;
  }
  if (pos < report_text.size() && report_text[pos] == '\n') ++pos;
  return report_text.substr(pos);
}

void write_manifest(const fs::path& dir) {
  std::vector<std::pair<std::string, fs::path>> files;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(dir, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    const fs::path rel = fs::relative(it->path(), dir);
    if (rel == "manifest.txt" || it->path().extension() == ".tmp") continue;
    files.emplace_back(rel.generic_string(), it->path());
  }
  if (ec) throw Error(ErrorCode::io_error, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  std::string out = "# sha256  bytes  path; report files are hashed past their header\n";
  for (const auto& [rel, path] : files) {
    const std::string content = io::read_file(path);
    const bool report = rel.size() >= 10 && rel.compare(rel.size() - 10, 10, "report.txt") == 0;
    const std::string hashed = report ? report_body(content) : content;
    out += io::sha256_hex(hashed) + "  " + std::to_string(hashed.size()) + "  " + rel +
           (report ? "  body" : "") + "\n";
  }
  io::write_file_atomic(dir / "manifest.txt", out);
}

void cmd_background(const RunConfig& cfg, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = cfg.out_dir;
  ensure_dir(dir);
  ReportBody body;
  body.add("command", "background");
  const int steps = cfg.background_steps > 0 ? cfg.background_steps : cfg.n1;
  body.add("steps", steps);
  echo_config(cfg, body);
  BackgroundSolution bg;
  try {
    bg = solve_background(cfg.background, steps);
  } catch (const Error& e) {
    record_failure(dir, "background", e, seconds_since(t0), body);
    throw;
  }
  write_background_csv(bg, dir / "background.csv");
  io::write_file_atomic(dir / "background.svg",
                        io::svg_line_chart("background profiles", bg.x1,
                                           {{"rho", bg.rho},
                                            {"u", bg.u},
                                            {"E", bg.e_field},
                                            {"Phi0", bg.elec_potential}}));
  double flux_defect = 0.0;
  for (std::size_t k = 0; k < bg.size(); ++k)
    flux_defect = std::max(flux_defect, std::abs(bg.rho[k] * bg.u[k] - bg.params.j0) / bg.params.j0);
  body.add("status", "ok");
  body.add("rho_star", cfg.background.rho_star());
  body.add("rho_min", bg.rho_min);
  body.add("rho_max", bg.rho_max);
  body.add("nu0", bg.nu0);
  body.add("mass_flux_defect", flux_defect);
  body.add("u_exit", bg.u.back());
  body.add("p_exit", bg.p.back());
  body.add("Phi0_exit", bg.elec_potential.back());
  body.add("phi0_exit", bg.vel_potential.back());
  write_report(dir / "report.txt", "background", seconds_since(t0), body);
  write_manifest(dir);
  log << "background: " << steps << " steps, rho in [" << format_value(bg.rho_min) << ", "
      << format_value(bg.rho_max) << "], nu0 " << format_value(bg.nu0) << " -> " << dir.string()
      << "\n";
}

void cmd_solve(const RunConfig& cfg, std::ostream& log) {
  const SolveSummary s = solve_into(cfg);
  log << "solve: converged in " << s.outer_sweeps << " outer sweeps, deviation "
      << format_value(s.deviation) << " -> " << cfg.out_dir.string() << "\n";
}

void cmd_verify(const RunConfig& cfg, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = cfg.out_dir;
  const fs::path fields = dir / "fields";
  const BaseState base = BaseState::build(cfg.background, cfg.n1, cfg.n2);
  const Grid2D& g = base.grid;
  const BoundaryData bd = make_boundary(cfg, base);

  auto read = [&](const char* name) { return io::read_field_csv(g, fields / (std::string(name) + ".csv")); };
  PrimitiveState ps{read("rho"), read("u"),  read("v"), read("p"),
                    read("Phi"), read("S"),  read("K"), ScalarField(g)};
  ps.min_axial_velocity = std::numeric_limits<double>::infinity();
  ps.subsonic_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double speed_sq = ps.u[k] * ps.u[k] + ps.v[k] * ps.v[k];
    ps.bernoulli[k] = eval_bernoulli(base.constants, ps.rho[k], speed_sq, ps.entropy[k]);
    ps.min_axial_velocity = std::min(ps.min_axial_velocity, ps.u[k]);
    ps.subsonic_margin = std::min(
        ps.subsonic_margin, eval_sound_speed_sq(base.constants, ps.rho[k], ps.entropy[k]) - speed_sq);
  }
  ps.axial_velocity_positive = ps.min_axial_velocity > 0.0;

  const VerifyReport v = verify_solution(base, ps, bd);
  const PoissonOperator poisson(g);
  const double helmholtz = helmholtz_error(VectorField(ps.u, ps.v), poisson);

  ReportBody body;
  body.add("command", "verify");
  echo_config(cfg, body);
  body.add("deviation", primitive_deviation(ps, base.fields));
  body.add("min_axial_velocity", ps.min_axial_velocity);
  body.add("axial_velocity_positive", ps.axial_velocity_positive);
  add_verify_report(v, body);
  body.add("helmholtz_roundtrip", helmholtz);
  write_report(dir / "verify_report.txt", "verify", seconds_since(t0), body);
  write_manifest(dir);
  log << "verify: mass " << format_value(v.mass.sup) << ", momentum " << format_value(v.momentum1.sup)
      << " / " << format_value(v.momentum2.sup) << ", poisson " << format_value(v.poisson.sup)
      << ", vorticity " << format_value(v.vorticity.sup) << ", drift "
      << format_value(v.mass_flux_drift) << ", helmholtz " << format_value(helmholtz) << "\n";
}

std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  if (cfg.sweep_amplitudes.empty())
    throw Error(ErrorCode::config_error, "sweep needs at least one amplitude");
  const fs::path dir = cfg.out_dir;
  ensure_dir(dir);
  const std::size_t n = cfg.sweep_amplitudes.size();
  std::vector<SweepRow> rows(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      RunConfig run = cfg;
      const double a = cfg.sweep_amplitudes[k];
      run.perturbation = channel_perturbation(cfg.sweep_channel, a);
      run.perturbation.potential_entrance_weight = cfg.perturbation.potential_entrance_weight;
      run.perturbation.potential_exit_weight = cfg.perturbation.potential_exit_weight;
      run.out_dir = dir / "sweep" / ("run_" + std::to_string(k));
      SweepRow& row = rows[k];
      row.amplitude = a;
      try {
        const SolveSummary s = solve_into(run);
        row.status = "converged";
        row.outer_sweeps = s.outer_sweeps;
        row.deviation = s.deviation;
      } catch (const SolverNotConverged& e) {
        row.status = to_string(e.code());
        row.error = e.code();
        row.outer_sweeps = e.report().sweeps;
      } catch (const Error& e) {
        row.status = to_string(e.code());
        row.error = e.code();
      }
    }
  };
  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(thread_cap(), n));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::string csv = "amplitude,status,outer_sweeps,deviation,ratio\n";
  for (std::size_t k = 0; k < n; ++k) {
    SweepRow& row = rows[k];
    if (k > 0 && !row.error && !rows[k - 1].error && row.deviation > 0.0)
      row.ratio = rows[k - 1].deviation / row.deviation;
    csv += io::format_double(row.amplitude) + "," + row.status + "," +
           std::to_string(row.outer_sweeps) + "," + io::format_double(row.deviation) + "," +
           (row.ratio ? io::format_double(*row.ratio) : std::string()) + "\n";
    log << "sweep: a=" << format_value(row.amplitude) << " " << row.status << " deviation "
        << format_value(row.deviation);
    if (row.ratio) log << " ratio " << format_value(*row.ratio);
    log << "\n";
  }
  io::write_file_atomic(dir / "summary.csv", csv);
  write_manifest(dir);
  return rows;
}

}  // namespace epn::cli
