#include "epnozzle/eos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "epnozzle/error.hpp"

namespace epn {

void StateConstants::validate() const {
  if (!(gamma > 1.0) || !(p_hat > 0.0) || !(c_v > 0.0))
    throw Error(ErrorCode::invalid_argument, "state constants need gamma > 1, p_hat > 0, c_v > 0");
}

double StateConstants::entropy_scale(double entropy) const {
  return p_hat * std::exp(entropy / c_v);
}

double eval_pressure(const StateConstants& sc, double rho, double entropy) {
  return sc.entropy_scale(entropy) * std::pow(rho, sc.gamma);
}

double eval_H(const StateConstants& sc, double entropy, double zeta) {
  if (!(zeta > 0.0))
    throw Error(ErrorCode::vacuum_state,
                "density closure undefined for head " + format_value(zeta));
  const double g = sc.gamma;
  return std::pow((g - 1.0) * zeta / (g * sc.entropy_scale(entropy)), 1.0 / (g - 1.0));
}

double eval_T(const StateConstants& sc, double rho, double entropy) {
  if (!(rho > 0.0))
    throw Error(ErrorCode::non_positive_density, "temperature needs rho > 0");
  return sc.c_v * sc.entropy_scale(entropy) * std::pow(rho, sc.gamma - 1.0) / (sc.gamma - 1.0);
}

double eval_sound_speed_sq(const StateConstants& sc, double rho, double entropy) {
  return sc.gamma * sc.entropy_scale(entropy) * std::pow(rho, sc.gamma - 1.0);
}

double eval_bernoulli(const StateConstants& sc, double rho, double speed_sq, double entropy) {
  return 0.5 * speed_sq + eval_sound_speed_sq(sc, rho, entropy) / (sc.gamma - 1.0);
}

double eval_entropy(const StateConstants& sc, double p, double rho) {
  return sc.c_v * std::log(p / (sc.p_hat * std::pow(rho, sc.gamma)));
}

double FluxArgs::head() const {
  const double m1 = q[0] + s[1];
  const double m2 = q[1] - s[0];
  return pseudo_bernoulli + potential - 0.5 * (m1 * m1 + m2 * m2);
}

FluxValues eval_AB(const StateConstants& sc, const FluxArgs& x) {
  const double b = eval_H(sc, x.entropy, x.head());
  return {{b * x.q[0], b * x.q[1]}, b};
}

FluxDerivatives eval_AB_derivatives(const StateConstants& sc, const FluxArgs& x) {
  const double zeta = x.head();
  const double h = eval_H(sc, x.entropy, zeta);
  const double h_zeta = h / ((sc.gamma - 1.0) * zeta);
  const double h_s = -h / ((sc.gamma - 1.0) * sc.c_v);
  const double m1 = x.q[0] + x.s[1];
  const double m2 = x.q[1] - x.s[0];

  FluxDerivatives out;
  auto& db = out.db;
  db[kEntropy] = h_s;
  db[kEta] = h_zeta;
  db[kZ] = h_zeta;
  db[kQ1] = -m1 * h_zeta;
  db[kQ2] = -m2 * h_zeta;
  db[kS1] = m2 * h_zeta;
  db[kS2] = -m1 * h_zeta;
  for (int k = 0; k < kFluxSlots; ++k) {
    out.da1[k] = x.q[0] * db[k];
    out.da2[k] = x.q[1] * db[k];
  }
  out.da1[kQ1] += h;
  out.da2[kQ2] += h;
  return out;
}

CoefficientFields background_coefficients(const BackgroundFields& bg, const StateConstants& sc,
                                          double s0) {
  sc.validate();
  const Grid2D& g = bg.rho.grid();
  CoefficientFields cf(g);
  const double k = sc.gamma * sc.entropy_scale(s0);
  double nu1 = std::numeric_limits<double>::infinity();
  double nu2 = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double rho = bg.rho[n], u = bg.u[n];
    const double c2 = k * std::pow(rho, sc.gamma - 1.0);
    const double a11 = rho * (1.0 - u * u / c2);
    if (!(a11 > 0.0))
      throw Error(ErrorCode::ellipticity_lost,
                  "background speed reaches the sound speed (a11 = " + format_value(a11) + ")");
    const double rho_2mg = std::pow(rho, 2.0 - sc.gamma);
    cf.a11[n] = a11;
    cf.a22[n] = rho;
    cf.b1[n] = rho_2mg * u / k;
    cf.b2[n] = 0.0;
    cf.c1[n] = -cf.b1[n];
    cf.c2[n] = 0.0;
    cf.d[n] = rho_2mg / k;
    nu1 = std::min({nu1, a11, rho});
    nu2 = std::min(nu2, cf.d[n]);
  }
  cf.nu1 = nu1;
  cf.nu2 = nu2;
  return cf;
}

}  // namespace epn
