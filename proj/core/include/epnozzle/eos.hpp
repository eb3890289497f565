#pragma once

#include <array>

#include "epnozzle/background.hpp"
#include "epnozzle/grid.hpp"

namespace epn {

/// Polytropic gas constants: p = p_hat * exp(S/c_v) * rho^gamma.
struct StateConstants {
  double gamma = 2.0;
  double p_hat = 1.0;
  double c_v = 1.0;

  static StateConstants from(const BackgroundParams& p) { return {p.gamma, p.p_hat, p.c_v}; }
  void validate() const;
  /// p_hat * exp(S/c_v)
  double entropy_scale(double entropy) const;
};

double eval_pressure(const StateConstants& sc, double rho, double entropy);
/// Density closure H(S, zeta) = [(gamma-1) zeta / (gamma p_hat e^{S/c_v})]^{1/(gamma-1)}.
/// Throws VacuumState for zeta <= 0.
double eval_H(const StateConstants& sc, double entropy, double zeta);
/// Temperature c_v p_hat e^{S/c_v} rho^{gamma-1} / (gamma-1).
double eval_T(const StateConstants& sc, double rho, double entropy);
/// Bernoulli head |u|^2/2 + gamma p_hat e^{S/c_v} rho^{gamma-1} / (gamma-1).
double eval_bernoulli(const StateConstants& sc, double rho, double speed_sq, double entropy);
/// Squared sound speed gamma p_hat e^{S/c_v} rho^{gamma-1}.
double eval_sound_speed_sq(const StateConstants& sc, double rho, double entropy);
/// Entropy recovered from (p, rho).
double eval_entropy(const StateConstants& sc, double p, double rho);

/// Arguments of the flux functions A and B: entropy, pseudo-Bernoulli
/// invariant, electric potential, potential-velocity pair q and the
/// stream-potential gradient s (entering through s_perp = (s2, -s1)).
struct FluxArgs {
  double entropy = 0.0;
  double pseudo_bernoulli = 0.0;
  double potential = 0.0;
  Vec2 q{0.0, 0.0};
  Vec2 s{0.0, 0.0};

  /// eta + z - |q + s_perp|^2 / 2
  double head() const;
};

struct FluxValues {
  Vec2 a;    ///< A_j = B q_j
  double b;  ///< B = H(entropy, head)
};

/// Argument slots of the flux-function derivatives.
enum FluxSlot : int { kEntropy = 0, kEta, kZ, kQ1, kQ2, kS1, kS2, kFluxSlots };

struct FluxDerivatives {
  std::array<double, kFluxSlots> da1{};
  std::array<double, kFluxSlots> da2{};
  std::array<double, kFluxSlots> db{};
};

FluxValues eval_AB(const StateConstants& sc, const FluxArgs& x);
FluxDerivatives eval_AB_derivatives(const StateConstants& sc, const FluxArgs& x);

/// Linearisation coefficients of the potential system about the background.
/// The background does not depend on x2, so every field is constant along
/// columns. a12 = a21 = 0 identically and is not stored.
struct CoefficientFields {
  ScalarField a11, a22, b1, b2, c1, c2, d;
  double nu1 = 0.0;  ///< min over the grid of min(a11, a22)
  double nu2 = 0.0;  ///< min over the grid of d

  explicit CoefficientFields(const Grid2D& g)
      : a11(g), a22(g), b1(g), b2(g), c1(g), c2(g), d(g) {}
  const Grid2D& grid() const noexcept { return a11.grid(); }
};

/// Evaluates the derivatives of A and B at the background state
/// (S0, K0, Phi0, (u,0), 0). Throws EllipticityLost if a11 <= 0 anywhere.
CoefficientFields background_coefficients(const BackgroundFields& bg, const StateConstants& sc,
                                          double s0);

}  // namespace epn
