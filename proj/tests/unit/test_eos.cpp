#include <doctest.h>

#include <cmath>
#include <random>

#include "epnozzle/background.hpp"
#include "epnozzle/eos.hpp"
#include "epnozzle/error.hpp"
#include "fixtures.hpp"

using namespace epn;

namespace {

const StateConstants kFixture{2.0, 1.0, 1.0};

FluxArgs args(double s, double eta, double z, Vec2 q, Vec2 sv) {
  FluxArgs a;
  a.entropy = s;
  a.pseudo_bernoulli = eta;
  a.potential = z;
  a.q = q;
  a.s = sv;
  return a;
}

double slot(FluxArgs& a, int k) {
  switch (k) {
    case kEntropy: return a.entropy;
    case kEta: return a.pseudo_bernoulli;
    case kZ: return a.potential;
    case kQ1: return a.q[0];
    case kQ2: return a.q[1];
    case kS1: return a.s[0];
    default: return a.s[1];
  }
}

void set_slot(FluxArgs& a, int k, double v) {
  switch (k) {
    case kEntropy: a.entropy = v; break;
    case kEta: a.pseudo_bernoulli = v; break;
    case kZ: a.potential = v; break;
    case kQ1: a.q[0] = v; break;
    case kQ2: a.q[1] = v; break;
    case kS1: a.s[0] = v; break;
    default: a.s[1] = v; break;
  }
}

}  // namespace

TEST_CASE("density closure fixture values") {
  CHECK(eval_H(kFixture, 0.0, 2.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(eval_H(kFixture, std::log(2.0), 4.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("density closure inverts the enthalpy for several gammas") {
  for (double gamma : {1.2, 1.4, 5.0 / 3.0, 2.0, 3.0}) {
    const StateConstants sc{gamma, 0.7, 1.3};
    for (double s : {-0.5, 0.0, 0.8})
      for (double rho : {0.1, 1.0, 3.7}) {
        const double zeta = eval_sound_speed_sq(sc, rho, s) / (gamma - 1.0);
        CHECK(eval_H(sc, s, zeta) == doctest::Approx(rho).epsilon(1e-12));
      }
  }
}

TEST_CASE("non-positive head is a vacuum state") {
  try {
    eval_H(kFixture, 0.0, 0.0);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::vacuum_state);
  }
  CHECK_THROWS_AS(eval_H(kFixture, 0.0, -1.0), Error);
}

TEST_CASE("temperature fixture values") {
  CHECK(eval_T(kFixture, 1.0, 0.0) == doctest::Approx(1.0));
  CHECK(eval_T(kFixture, 2.0, 0.0) == doctest::Approx(2.0));
  CHECK(eval_T(kFixture, 1.0, std::log(2.0)) == doctest::Approx(2.0));
}

TEST_CASE("pressure, Bernoulli and entropy are mutually consistent") {
  const StateConstants sc{1.4, 1.0, 1.0};
  const double rho = 1.3, s = 0.2;
  const double p = eval_pressure(sc, rho, s);
  CHECK(eval_entropy(sc, p, rho) == doctest::Approx(s).epsilon(1e-13));
  CHECK(eval_bernoulli(sc, rho, 0.5, s) == doctest::Approx(0.25 + 1.4 / 0.4 * p / rho).epsilon(1e-13));
  CHECK(eval_bernoulli(kFixture, 1.0, 1.0, 0.0) == doctest::Approx(2.5));
}

TEST_CASE("flux functions at the fixture points") {
  FluxValues v = eval_AB(kFixture, args(0.0, 2.5, 0.0, {1.0, 0.0}, {0.0, 0.0}));
  CHECK(v.b == doctest::Approx(1.0));
  CHECK(v.a[0] == doctest::Approx(1.0));
  CHECK(v.a[1] == 0.0);

  v = eval_AB(kFixture, args(0.0, 3.0, 0.0, {0.0, 0.0}, {0.0, 1.0}));
  CHECK(args(0.0, 3.0, 0.0, {0.0, 0.0}, {0.0, 1.0}).head() == doctest::Approx(2.5));
  CHECK(v.b == doctest::Approx(1.25));
  CHECK(v.a[0] == 0.0);
  CHECK(v.a[1] == 0.0);
}

TEST_CASE("flux derivatives match central differences at random admissible points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> small(-0.3, 0.3);
  const StateConstants sc{1.4, 0.9, 1.1};
  for (int trial = 0; trial < 3; ++trial) {
    FluxArgs x = args(small(rng), 3.0 + small(rng), small(rng), {0.8 + small(rng), small(rng)},
                      {small(rng), small(rng)});
    const FluxDerivatives d = eval_AB_derivatives(sc, x);
    const double step = 1e-5;
    for (int k = 0; k < kFluxSlots; ++k) {
      FluxArgs plus = x, minus = x;
      set_slot(plus, k, slot(x, k) + step);
      set_slot(minus, k, slot(x, k) - step);
      const FluxValues fp = eval_AB(sc, plus), fm = eval_AB(sc, minus);
      CHECK(d.db[k] == doctest::Approx((fp.b - fm.b) / (2 * step)).epsilon(1e-6));
      CHECK(d.da1[k] == doctest::Approx((fp.a[0] - fm.a[0]) / (2 * step)).epsilon(1e-6));
      CHECK(d.da2[k] == doctest::Approx((fp.a[1] - fm.a[1]) / (2 * step)).epsilon(1e-6));
    }
    CHECK(d.db[kZ] == d.db[kEta]);
  }
}

TEST_CASE("coefficients of the gamma = 2 constant background") {
  const BackgroundSolution bg = solve_background(epn::test::fixture_params(), 16);
  const Grid2D g(16, 8, 1.0);
  const CoefficientFields cf = background_coefficients(sample_background(bg, g), kFixture, 0.0);
  for (std::size_t n = 0; n < g.size(); ++n) {
    CHECK(cf.a11[n] == doctest::Approx(0.5));
    CHECK(cf.a22[n] == doctest::Approx(1.0));
    CHECK(cf.b1[n] == doctest::Approx(0.5));
    CHECK(cf.c1[n] == doctest::Approx(-0.5));
    CHECK(cf.d[n] == doctest::Approx(0.5));
  }
  CHECK(cf.nu1 == doctest::Approx(0.5));
  CHECK(cf.nu2 == doctest::Approx(0.5));
}

TEST_CASE("coefficient structure on a non-trivial background") {
  const BackgroundParams p = epn::test::physical_params();
  const BackgroundSolution bg = solve_background(p, 64);
  const Grid2D g(64, 16, 1.0);
  const StateConstants sc = StateConstants::from(p);
  const BackgroundFields f = sample_background(bg, g);
  const CoefficientFields cf = background_coefficients(f, sc, p.s0);
  CHECK(cf.nu1 > 0.0);
  CHECK(cf.nu2 > 0.0);
  for (std::size_t n = 0; n < g.size(); ++n) {
    CHECK(cf.b1[n] + cf.c1[n] == 0.0);
    CHECK(cf.b2[n] + cf.c2[n] == 0.0);
    CHECK(cf.a11[n] >= cf.nu1);
    CHECK(cf.a22[n] >= cf.nu1);
    CHECK(cf.d[n] >= cf.nu2);
  }
  // a11 is the q1-derivative of A1 at the background state.
  const double k0 = bg.bernoulli(0) - bg.elec_potential[0];
  const int i = 20;
  const FluxArgs x = args(p.s0, k0, f.elec_potential(i, 3), {f.u(i, 3), 0.0}, {0.0, 0.0});
  CHECK(eval_AB_derivatives(sc, x).da1[kQ1] == doctest::Approx(cf.a11(i, 3)).epsilon(1e-10));
}

TEST_CASE("sonic background loses ellipticity") {
  const Grid2D g(8, 8, 1.0);
  // gamma = 2 fixture: c^2 = 2 rho, so rho = 1, u = sqrt(2) is sonic.
  BackgroundFields f{ScalarField(g, 1.0), ScalarField(g, std::sqrt(2.0)), ScalarField(g, 1.0),
                     ScalarField(g), ScalarField(g), ScalarField(g)};
  try {
    background_coefficients(f, kFixture, 0.0);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ellipticity_lost);
  }
}
