#include <doctest.h>

#include <cmath>

#include "epnozzle/error.hpp"
#include "epnozzle/transport.hpp"
#include "fixtures.hpp"

using namespace epn;
using epn::test::kPi;

namespace {

// w* = x2 + 0.1 x1 (1 - x1) sin(pi x2), whose inlet trace is the identity.
double w_star(double x1, double x2) { return x2 + 0.1 * x1 * (1.0 - x1) * std::sin(kPi * x2); }
double w_star_1(double x1, double x2) { return 0.1 * (1.0 - 2.0 * x1) * std::sin(kPi * x2); }
double w_star_2(double x1, double x2) { return 1.0 + 0.1 * kPi * x1 * (1.0 - x1) * std::cos(kPi * x2); }

VectorField closed_form_flux(const Grid2D& g) {
  return VectorField(ScalarField::from_function(g, w_star_2),
                     ScalarField::from_function(g, [](double a, double b) { return -w_star_1(a, b); }));
}

ErrorCode code_of_stream(const VectorField& V) {
  try {
    compute_stream(V);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("monotone cubic interpolates, preserves monotonicity and inverts") {
  const std::vector<double> x{0.0, 0.1, 0.3, 0.35, 0.8, 1.0};
  const std::vector<double> y{0.0, 0.05, 0.06, 0.5, 0.51, 2.0};
  const MonotoneCubic mc(x, y);
  CHECK(mc.strictly_increasing());
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(mc.value(x[k]) == doctest::Approx(y[k]).epsilon(1e-15));
  double prev = -1.0;
  for (int s = 0; s <= 1000; ++s) {
    const double t = s / 1000.0;
    const double v = mc.value(t);
    CHECK(v >= prev);
    CHECK(mc.derivative(t) >= 0.0);
    CHECK(mc.inverse(v) == doctest::Approx(t).epsilon(1e-10));
    prev = v;
  }
  // C1 at an interior knot.
  CHECK(mc.derivative(0.3 - 1e-9) == doctest::Approx(mc.derivative(0.3 + 1e-9)).epsilon(1e-6));
  CHECK(mc.inverse(-5.0) == 0.0);
  CHECK(mc.inverse(5.0) == 1.0);
}

TEST_CASE("monotone cubic is exact on linear data and rejects bad tables") {
  const MonotoneCubic lin({0.0, 0.5, 1.0, 2.0}, {1.0, 2.0, 3.0, 5.0});
  CHECK(lin.value(1.7) == doctest::Approx(4.4));
  CHECK(lin.derivative(0.2) == doctest::Approx(2.0));
  CHECK_THROWS_AS(MonotoneCubic({0.0}, {1.0}), Error);
  CHECK_THROWS_AS(MonotoneCubic({0.0, 0.0, 1.0}, {0.0, 1.0, 2.0}), Error);
}

TEST_CASE("inlet profiles: closed form, constant, tabulated and the smoothness flag") {
  const InletProfile c = InletProfile::constant(0.3);
  CHECK(c.value(0.7) == 0.3);
  CHECK(c.derivative(0.7) == 0.0);
  CHECK(c.smooth());

  std::vector<double> x2, smooth, kink;
  for (int j = 0; j <= 64; ++j) {
    x2.push_back(j / 64.0);
    smooth.push_back(std::cos(kPi * j / 64.0));
    kink.push_back(std::abs(j / 64.0 - 0.5));
  }
  const InletProfile ts = InletProfile::tabulated(x2, smooth);
  CHECK(ts.smooth());
  CHECK(ts.value(0.25) == doctest::Approx(std::cos(kPi / 4)).epsilon(1e-4));
  CHECK_FALSE(InletProfile::tabulated(x2, kink).smooth());
}

TEST_CASE("uniform flux gives w = J0 x2 and the identity flow map") {
  const Grid2D g(16, 8, 1.0);
  const double j0 = 1.7;
  const VectorField V(ScalarField(g, j0), ScalarField(g));
  const StreamFunction sf = compute_stream(V);
  CHECK(sf.nu_star == j0);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) CHECK(sf.w(i, j) == doctest::Approx(j0 * g.x2(j)).epsilon(1e-14));
  const FlowMap fm = flow_map(sf);
  CHECK(fm.clamp_count == 0);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) CHECK(fm.lmap(i, j) == doctest::Approx(g.x2(j)).epsilon(1e-12));

  const FlowMapGradient grad =
      flow_map_gradient(fm, V, InletProfile::constant(0.0), InletProfile::constant(2.0));
  CHECK(sup_norm(grad.grad.c1) == 0.0);
  CHECK(sup_norm(grad.grad.c2 - ScalarField(g, 1.0)) < 1e-14);
  CHECK(sup_norm(grad.d2_entropy) == 0.0);
  CHECK(sup_norm(grad.d2_pseudo) == 0.0);
}

TEST_CASE("closed-form stream function is recovered at second order") {
  auto err = [](int n) {
    const Grid2D g(n, n, 1.0);
    const StreamFunction sf = compute_stream(closed_form_flux(g));
    CHECK(sf.nu_star > 0.0);
    for (int i = 0; i < g.nx(); ++i) CHECK(sf.w(i, 0) == 0.0);
    return sup_norm(sf.w - ScalarField::from_function(g, w_star));
  };
  const double e1 = err(16), e2 = err(32), e3 = err(64);
  CHECK(epn::test::order(e1, e2) > 1.9);
  CHECK(epn::test::order(e2, e3) > 1.9);
}

TEST_CASE("closed-form flow map, transported profile and gradient") {
  const Grid2D g(64, 64, 1.0);
  const VectorField V = closed_form_flux(g);
  const FlowMap fm = flow_map(compute_stream(V));
  CHECK(fm.lmap(32, 32) == doctest::Approx(0.525).epsilon(1e-4));
  for (int j = 0; j < g.ny(); ++j) CHECK(fm.lmap(0, j) == g.x2(j));
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(fm.lmap[k] >= 0.0);
    CHECK(fm.lmap[k] <= 1.0);
  }

  const InletProfile id = InletProfile::closed_form([](double t) { return t; }, [](double) { return 1.0; });
  const InletProfile s_en = InletProfile::closed_form([](double t) { return std::cos(kPi * t); },
                                                      [](double t) { return -kPi * std::sin(kPi * t); });
  const TransportState ts = transport_W(id, s_en, fm);
  CHECK(ts.entropy(32, 32) == doctest::Approx(0.525).epsilon(1e-4));
  for (int j = 0; j < g.ny(); ++j) {
    CHECK(ts.entropy(0, j) == g.x2(j));
    CHECK(ts.pseudo_bernoulli(0, j) == doctest::Approx(std::cos(kPi * g.x2(j))).epsilon(1e-14));
  }

  const FlowMapGradient grad = flow_map_gradient(fm, V, id, s_en);
  CHECK(sup_norm(grad.grad.c1 - ScalarField::from_function(g, w_star_1)) < 1e-3);
  CHECK(sup_norm(grad.grad.c2 - ScalarField::from_function(g, w_star_2)) < 1e-3);
}

TEST_CASE("constant inlet data are transported unchanged") {
  const Grid2D g(32, 32, 1.0);
  const VectorField V = closed_form_flux(g);
  const FlowMap fm = flow_map(compute_stream(V));
  const TransportState ts = transport_W(InletProfile::constant(0.4), InletProfile::constant(-1.0), fm);
  CHECK(sup_norm(ts.entropy - ScalarField(g, 0.4)) == 0.0);
  CHECK(sup_norm(ts.pseudo_bernoulli - ScalarField(g, -1.0)) == 0.0);
  const FlowMapGradient grad =
      flow_map_gradient(fm, V, InletProfile::constant(0.4), InletProfile::constant(-1.0));
  CHECK(sup_norm(grad.d2_entropy) == 0.0);
}

TEST_CASE("reversed or divergent fluxes are rejected") {
  const Grid2D g(16, 16, 1.0);
  VectorField V = closed_form_flux(g);
  V.c1(5, 5) = -0.1;
  CHECK(code_of_stream(V) == ErrorCode::flux_not_positive);

  VectorField D(ScalarField(g, 1.0), ScalarField::from_function(g, [](double, double b) { return 0.5 * b; }));
  CHECK(code_of_stream(D) == ErrorCode::not_divergence_free);
}
