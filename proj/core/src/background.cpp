#include "epnozzle/background.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "epnozzle/error.hpp"
#include "epnozzle/io.hpp"

namespace epn {

double BackgroundParams::entropy_factor() const { return gamma * p_hat * std::exp(s0 / c_v); }

double BackgroundParams::rho_star() const {
  return std::pow(j0 * j0 / entropy_factor(), 1.0 / (gamma + 1.0));
}

void BackgroundParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, what);
  };
  require(std::isfinite(j0) && j0 > 0.0, "J0 must be positive");
  require(std::isfinite(s0), "S0 must be finite");
  require(std::isfinite(b0) && b0 > 0.0, "b0 must be positive");
  require(std::isfinite(e0), "E0 must be finite");
  require(std::isfinite(length) && length > 0.0, "L must be positive");
  require(std::isfinite(gamma) && gamma > 1.0, "gamma must exceed 1");
  require(std::isfinite(p_hat) && p_hat > 0.0, "p_hat must be positive");
  require(std::isfinite(c_v) && c_v > 0.0, "c_v must be positive");
  const double rs = rho_star();
  if (!(rho0 > rs)) {
    std::ostringstream os;
    os.precision(10);
    os << "inlet density rho0=" << rho0 << " must exceed the sonic density rho_star=" << rs
       << " (subsonic inlet bound)";
    throw Error(ErrorCode::invalid_argument, os.str());
  }
}

double BackgroundSolution::bernoulli(std::size_t k) const {
  const double g = params.gamma;
  return 0.5 * u[k] * u[k] + g / (g - 1.0) * p[k] / rho[k];
}

namespace {

struct OdeState {
  double rho;
  double e;
};

OdeState rhs(const BackgroundParams& prm, const OdeState& s) {
  if (!(s.rho > 0.0))
    throw Error(ErrorCode::non_positive_density, "background density reached " +
                                                     format_value(s.rho));
  const double k = prm.entropy_factor();
  const double denom = k * std::pow(s.rho, prm.gamma - 1.0) - prm.j0 * prm.j0 / (s.rho * s.rho);
  if (!(denom > 0.0))
    throw Error(ErrorCode::subsonicity_lost,
                "background reaches the sonic point inside [0, L]; shorten the nozzle");
  return {s.rho * s.e / denom, s.rho - prm.b0};
}

}  // namespace

std::vector<double> cumulative_simpson(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> out(n, 0.0);
  if (n < 4) {
    for (std::size_t k = 1; k < n; ++k) out[k] = out[k - 1] + 0.5 * h * (f[k - 1] + f[k]);
    return out;
  }
  // Running even-prefix Simpson sums.
  std::vector<double> even(n, 0.0);
  for (std::size_t k = 2; k < n; k += 2)
    even[k] = even[k - 2] + h / 3.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k]);
  for (std::size_t k = 1; k < n; ++k) {
    if (k % 2 == 0) {
      out[k] = even[k];
    } else if (k == 1) {
      out[k] = h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
    } else {
      out[k] = even[k - 3] + 3.0 * h / 8.0 * (f[k - 3] + 3.0 * f[k - 2] + 3.0 * f[k - 1] + f[k]);
    }
  }
  return out;
}

BackgroundSolution solve_background(const BackgroundParams& params, int n_steps) {
  params.validate();
  if (n_steps < 3) throw Error(ErrorCode::invalid_argument, "need at least 3 ODE steps");

  const auto n = static_cast<std::size_t>(n_steps);
  const double h = params.length / n_steps;
  BackgroundSolution bg;
  bg.params = params;
  bg.x1.resize(n + 1);
  bg.rho.resize(n + 1);
  bg.e_field.resize(n + 1);

  OdeState s{params.rho0, params.e0};
  bg.x1[0] = 0.0;
  bg.rho[0] = s.rho;
  bg.e_field[0] = s.e;
  for (std::size_t k = 0; k < n; ++k) {
    const OdeState k1 = rhs(params, s);
    const OdeState k2 = rhs(params, {s.rho + 0.5 * h * k1.rho, s.e + 0.5 * h * k1.e});
    const OdeState k3 = rhs(params, {s.rho + 0.5 * h * k2.rho, s.e + 0.5 * h * k2.e});
    const OdeState k4 = rhs(params, {s.rho + h * k3.rho, s.e + h * k3.e});
    s.rho += h / 6.0 * (k1.rho + 2.0 * k2.rho + 2.0 * k3.rho + k4.rho);
    s.e += h / 6.0 * (k1.e + 2.0 * k2.e + 2.0 * k3.e + k4.e);
    rhs(params, s);  // rejects a sonic or vacuum end state
    bg.x1[k + 1] = k + 1 == n ? params.length : static_cast<double>(k + 1) * h;
    bg.rho[k + 1] = s.rho;
    bg.e_field[k + 1] = s.e;
  }

  const double kfac = params.entropy_factor();
  const double p_fac = params.p_hat * std::exp(params.s0 / params.c_v);
  bg.u.resize(n + 1);
  bg.p.resize(n + 1);
  bg.nu0 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= n; ++k) {
    const double r = bg.rho[k];
    bg.u[k] = params.j0 / r;
    bg.p[k] = p_fac * std::pow(r, params.gamma);
    bg.nu0 = std::min(bg.nu0, kfac * std::pow(r, params.gamma - 1.0) - params.j0 * params.j0 / (r * r));
  }
  bg.rho_min = *std::min_element(bg.rho.begin(), bg.rho.end());
  bg.rho_max = *std::max_element(bg.rho.begin(), bg.rho.end());
  bg.elec_potential = cumulative_simpson(bg.e_field, h);
  bg.vel_potential = cumulative_simpson(bg.u, h);
  return bg;
}

double interpolate_profile(const std::vector<double>& values, double length, double x) {
  const int n = static_cast<int>(values.size()) - 1;
  const double h = length / n;
  const double s = std::clamp(x / h, 0.0, static_cast<double>(n));
  const int k = static_cast<int>(std::lround(s));
  if (std::abs(s - k) < 1e-12) return values[static_cast<std::size_t>(k)];
  // 4-point stencil [i0, i0+3] around the cell containing s.
  int i0 = static_cast<int>(std::floor(s)) - 1;
  i0 = std::clamp(i0, 0, n - 3);
  double acc = 0.0;
  for (int a = 0; a < 4; ++a) {
    double w = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) w *= (s - (i0 + b)) / static_cast<double>(a - b);
    acc += w * values[static_cast<std::size_t>(i0 + a)];
  }
  return acc;
}

BackgroundFields sample_background(const BackgroundSolution& bg, const Grid2D& grid) {
  if (std::abs(grid.length() - bg.params.length) > 1e-12 * bg.params.length)
    throw Error(ErrorCode::grid_mismatch, "grid spans [0," + format_value(grid.length()) +
                                              "] but the background spans [0," +
                                              format_value(bg.params.length) + "]");
  auto extend = [&](const std::vector<double>& prof) {
    std::vector<double> line(static_cast<std::size_t>(grid.nx()));
    for (int i = 0; i < grid.nx(); ++i)
      line[static_cast<std::size_t>(i)] = interpolate_profile(prof, bg.params.length, grid.x1(i));
    ScalarField f(grid);
    for (int j = 0; j < grid.ny(); ++j)
      for (int i = 0; i < grid.nx(); ++i) f(i, j) = line[static_cast<std::size_t>(i)];
    return f;
  };
  return {extend(bg.rho),     extend(bg.u),
          extend(bg.p),       extend(bg.e_field),
          extend(bg.elec_potential), extend(bg.vel_potential)};
}

void write_background_csv(const BackgroundSolution& bg, const std::filesystem::path& path) {
  std::string out = "x1,rho,u,p,E,Phi0,phi0\n";
  for (std::size_t k = 0; k < bg.size(); ++k) {
    for (double v : {bg.x1[k], bg.rho[k], bg.u[k], bg.p[k], bg.e_field[k],
                     bg.elec_potential[k]}) {
      out += io::format_double(v);
      out += ',';
    }
    out += io::format_double(bg.vel_potential[k]);
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

}  // namespace epn
