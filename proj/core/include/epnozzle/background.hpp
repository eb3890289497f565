#pragma once

#include <filesystem>
#include <vector>

#include "epnozzle/grid.hpp"

namespace epn {

/// Constants defining the one-dimensional subsonic base flow.
struct BackgroundParams {
  double j0 = 1.0;      ///< mass flux rho*u
  double s0 = 0.0;      ///< entropy
  double b0 = 1.0;      ///< background ion density
  double rho0 = 1.0;    ///< inlet density
  double e0 = 0.0;      ///< inlet electric field
  double length = 1.0;  ///< nozzle length L
  double gamma = 2.0;
  double p_hat = 1.0;
  double c_v = 1.0;

  /// gamma * p_hat * exp(S0/c_v); appears in every sound-speed expression.
  double entropy_factor() const;
  /// Sonic density: rho0 must exceed it for a subsonic inlet.
  double rho_star() const;
  /// Throws InvalidArgument, including for rho0 <= rho_star.
  void validate() const;
};

/// Background profiles sampled on a uniform 1D grid over [0, L].
struct BackgroundSolution {
  BackgroundParams params;
  std::vector<double> x1;
  std::vector<double> rho;
  std::vector<double> u;
  std::vector<double> p;
  std::vector<double> e_field;        ///< E = Phi0'
  std::vector<double> elec_potential; ///< Phi0, cumulative integral of E
  std::vector<double> vel_potential;  ///< phi0, cumulative integral of u
  double nu0 = 0.0;                   ///< min of c^2 - u^2 over the nodes
  double rho_min = 0.0;
  double rho_max = 0.0;

  std::size_t size() const noexcept { return x1.size(); }
  /// Bernoulli head |u|^2/2 + gamma/(gamma-1) p/rho at node k.
  double bernoulli(std::size_t k) const;
};

/// Integrates rho' = rho E / (K rho^(gamma-1) - J0^2/rho^2), E' = rho - b0 with
/// classical RK4 on `n_steps` equal steps, then fills u, p and the potentials
/// (composite Simpson).
///
/// Throws SubsonicityLost if the denominator becomes non-positive at any stage
/// and NonPositiveDensity if rho <= 0.
BackgroundSolution solve_background(const BackgroundParams& params, int n_steps);

/// Cumulative integral of uniformly spaced samples, fourth order: Simpson on
/// even prefixes, Simpson plus a 3/8 panel on odd ones.
std::vector<double> cumulative_simpson(const std::vector<double>& f, double h);

/// Background profiles extended constantly in x2.
struct BackgroundFields {
  ScalarField rho;
  ScalarField u;
  ScalarField p;
  ScalarField e_field;
  ScalarField elec_potential;
  ScalarField vel_potential;
};

/// Samples `bg` on `grid` with 4-point cubic Lagrange interpolation in x1.
/// Throws GridMismatch if the grid length differs from the background length.
BackgroundFields sample_background(const BackgroundSolution& bg, const Grid2D& grid);

/// Cubic Lagrange interpolation of a uniformly sampled profile on [0, L].
double interpolate_profile(const std::vector<double>& values, double length, double x);

/// CSV export: x1,rho,u,p,E,Phi0,phi0 with 17 significant digits.
void write_background_csv(const BackgroundSolution& bg, const std::filesystem::path& path);

}  // namespace epn
