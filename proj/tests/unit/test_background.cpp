#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "epnozzle/background.hpp"
#include "epnozzle/error.hpp"
#include "fixtures.hpp"

using namespace epn;
using epn::test::fixture_params;

namespace {

ErrorCode code_of(const BackgroundParams& p, int steps = 64) {
  try {
    solve_background(p, steps);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

// Explicit Euler on the same ODE, used as an independent fine-step oracle.
std::pair<double, double> euler_endpoint(const BackgroundParams& p, int steps) {
  const double h = p.length / steps;
  const double k = p.entropy_factor();
  double rho = p.rho0, e = p.e0;
  for (int s = 0; s < steps; ++s) {
    const double denom = k * std::pow(rho, p.gamma - 1.0) - p.j0 * p.j0 / (rho * rho);
    const double drho = rho * e / denom;
    const double de = rho - p.b0;
    rho += h * drho;
    e += h * de;
  }
  return {rho, e};
}

}  // namespace

TEST_CASE("sonic density of the gamma = 2 fixture") {
  CHECK(fixture_params().rho_star() == doctest::Approx(std::pow(2.0, -1.0 / 3.0)).epsilon(1e-14));
  CHECK(fixture_params().rho_star() == doctest::Approx(0.79370).epsilon(1e-5));
}

TEST_CASE("parameter invariants are enforced") {
  BackgroundParams p = fixture_params();
  CHECK_NOTHROW(p.validate());
  auto rejects = [](BackgroundParams q) {
    try {
      q.validate();
    } catch (const Error& e) {
      return e.code() == ErrorCode::invalid_argument;
    }
    return false;
  };
  BackgroundParams q = p;
  q.j0 = 0.0;
  CHECK(rejects(q));
  q = p;
  q.b0 = -1.0;
  CHECK(rejects(q));
  q = p;
  q.gamma = 1.0;
  CHECK(rejects(q));
  q = p;
  q.p_hat = 0.0;
  CHECK(rejects(q));
  q = p;
  q.c_v = 0.0;
  CHECK(rejects(q));
  q = p;
  q.length = 0.0;
  CHECK(rejects(q));
  q = p;
  q.s0 = NAN;
  CHECK(rejects(q));
  q = p;
  q.rho0 = 0.79;
  CHECK(rejects(q));
  q.rho0 = 0.80;
  CHECK_FALSE(rejects(q));
}

TEST_CASE("equilibrium inlet gives the constant state") {
  const BackgroundSolution bg = solve_background(fixture_params(), 32);
  REQUIRE(bg.size() == 33);
  for (std::size_t k = 0; k < bg.size(); ++k) {
    CHECK(bg.rho[k] == 1.0);
    CHECK(bg.u[k] == 1.0);
    CHECK(bg.e_field[k] == 0.0);
    CHECK(bg.elec_potential[k] == 0.0);
    CHECK(bg.vel_potential[k] == doctest::Approx(bg.x1[k]).epsilon(1e-14));
  }
  CHECK(bg.nu0 == doctest::Approx(1.0));
}

TEST_CASE("non-trivial background satisfies the structural invariants") {
  BackgroundParams p = fixture_params();
  p.e0 = 0.1;
  const BackgroundSolution bg = solve_background(p, 200);
  CHECK(bg.x1.front() == 0.0);
  CHECK(bg.x1.back() == p.length);
  CHECK(bg.elec_potential.front() == 0.0);
  CHECK(bg.vel_potential.front() == 0.0);
  CHECK(bg.nu0 > 0.0);
  CHECK(bg.rho_min > 0.0);
  for (std::size_t k = 0; k < bg.size(); ++k) {
    CHECK(bg.rho[k] * bg.u[k] == doctest::Approx(p.j0).epsilon(1e-12));
    CHECK(bg.rho[k] >= bg.rho_min);
    CHECK(bg.rho[k] <= bg.rho_max);
    CHECK(bg.p[k] == doctest::Approx(p.p_hat * std::pow(bg.rho[k], p.gamma)).epsilon(1e-13));
  }
}

TEST_CASE("Bernoulli head minus Phi0 is conserved along the background") {
  const BackgroundSolution bg = solve_background(epn::test::physical_params(), 400);
  const double ref = bg.bernoulli(0) - bg.elec_potential[0];
  for (std::size_t k = 0; k < bg.size(); ++k)
    CHECK(bg.bernoulli(k) - bg.elec_potential[k] == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("E0 = 0.1 matches a 100x finer explicit-Euler oracle") {
  BackgroundParams p = fixture_params();
  p.e0 = 0.1;
  const BackgroundSolution bg = solve_background(p, 100);
  // Euler is first order, so extrapolate two fine runs (Richardson) to reach 1e-8.
  const auto [r1, e1] = euler_endpoint(p, 10000);
  const auto [r2, e2] = euler_endpoint(p, 20000);
  const double rho_ref = 2.0 * r2 - r1;
  const double e_ref = 2.0 * e2 - e1;
  CHECK(std::abs(bg.rho.back() - rho_ref) / rho_ref <= 1e-8);
  CHECK(std::abs(bg.e_field.back() - e_ref) / std::abs(e_ref) <= 1e-8);
}

TEST_CASE("the one-step integrator converges at fourth order") {
  BackgroundParams p = epn::test::physical_params();
  const double r1 = solve_background(p, 8).rho.back();
  const double r2 = solve_background(p, 16).rho.back();
  const double r3 = solve_background(p, 32).rho.back();
  const double ratio = std::abs(r1 - r2) / std::abs(r2 - r3);
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("sonic point inside the nozzle raises subsonicity_lost") {
  BackgroundParams p = fixture_params();
  p.rho0 = 0.85;
  p.e0 = -1.0;
  CHECK(code_of(p) == ErrorCode::subsonicity_lost);
}

TEST_CASE("cumulative Simpson is exact for cubics on even and odd prefixes") {
  const double h = 0.1;
  std::vector<double> f;
  for (int k = 0; k <= 11; ++k) {
    const double x = k * h;
    f.push_back(1.0 + 2.0 * x - x * x + 4.0 * x * x * x);
  }
  const std::vector<double> F = cumulative_simpson(f, h);
  for (int k = 0; k <= 11; ++k) {
    const double x = k * h;
    CHECK(F[k] == doctest::Approx(x + x * x - x * x * x / 3.0 + x * x * x * x).epsilon(1e-13));
  }
}

TEST_CASE("sampling extends profiles constantly in x2 and reproduces nodes") {
  const BackgroundSolution bg = solve_background(epn::test::physical_params(), 32);
  const Grid2D g(32, 8, 1.0);
  const BackgroundFields f = sample_background(bg, g);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      CHECK(f.rho(i, j) == doctest::Approx(bg.rho[i]).epsilon(1e-14));
      CHECK(f.u(i, j) == doctest::Approx(bg.u[i]).epsilon(1e-14));
    }
  CHECK_THROWS_AS(sample_background(bg, Grid2D(32, 8, 2.0)), Error);
}

TEST_CASE("profile interpolation is exact on cubics and fourth order on smooth data") {
  std::vector<double> cubic;
  for (int k = 0; k <= 10; ++k) {
    const double x = 0.1 * k;
    cubic.push_back(x * x * x - x);
  }
  for (double x : {0.0, 0.03, 0.47, 0.99, 1.0})
    CHECK(interpolate_profile(cubic, 1.0, x) == doctest::Approx(x * x * x - x).epsilon(1e-13));

  auto err = [](int n) {
    std::vector<double> v;
    for (int k = 0; k <= n; ++k) v.push_back(std::sin(3.0 * k / n));
    double m = 0.0;
    for (int s = 0; s < 97; ++s) {
      const double x = (s + 0.5) / 97.0;
      m = std::max(m, std::abs(interpolate_profile(v, 1.0, x) - std::sin(3.0 * x)));
    }
    return m;
  };
  CHECK(epn::test::order(err(16), err(32)) > 3.7);
}

TEST_CASE("background CSV has a header and one row per node") {
  const auto dir = epn::test::scratch_dir("background_csv");
  const BackgroundSolution bg = solve_background(fixture_params(), 16);
  write_background_csv(bg, dir / "bg.csv");
  std::ifstream in(dir / "bg.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "x1,rho,u,p,E,Phi0,phi0");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 17);
}
