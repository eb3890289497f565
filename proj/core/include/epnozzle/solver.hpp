#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epnozzle/background.hpp"
#include "epnozzle/elliptic.hpp"
#include "epnozzle/eos.hpp"
#include "epnozzle/error.hpp"
#include "epnozzle/grid.hpp"
#include "epnozzle/transport.hpp"

namespace epn {

/// Background, grid and linearisation shared by every solve on one grid.
struct BaseState {
  BackgroundSolution background;
  Grid2D grid;
  StateConstants constants;
  BackgroundFields fields;
  CoefficientFields coefficients;
  double k0 = 0.0;      ///< pseudo-Bernoulli constant of the background
  double u_exit = 0.0;  ///< u(L)
  double p_exit = 0.0;  ///< p(L)

  /// Integrates the background with n1 steps so its nodes are the grid columns.
  static BaseState build(const BackgroundParams& params, int n1, int n2);
};

/// Amplitudes of the wall-compatible cosine perturbation families.
struct Perturbation {
  double potential = 0.0;       ///< a_phi: Phi_bd - Phi0
  double pressure = 0.0;        ///< a_p: p_ex - p(L)
  double entropy = 0.0;         ///< a_S: S_en - S0
  double bernoulli = 0.0;       ///< a_B: B_en - B0
  double charge = 0.0;          ///< a_b: b - b0
  double potential_entrance_weight = 1.0;
  double potential_exit_weight = 1.0;

  /// Every amplitude set to `a`.
  static Perturbation uniform(double a);
  Perturbation scaled(double s) const;
};

/// Boundary data (b, S_en, B_en, Phi_bd, p_ex) and derived quantities.
struct BoundaryData {
  ScalarField charge;            ///< b
  InletProfile entropy_en;       ///< S_en
  InletProfile bernoulli_en;     ///< B_en
  InletProfile pseudo_en;        ///< K_en = B_en - Phi_bd on the entrance
  InletProfile potential_en_profile;  ///< Phi_bd(0, .) in closed form
  std::vector<double> potential_en;  ///< Phi_bd(0, x2_j)
  std::vector<double> potential_ex;  ///< Phi_bd(L, x2_j)
  std::vector<double> pressure_ex;   ///< p_ex(x2_j)
  double sigma = 0.0;            ///< measured size of the data perturbation
  bool inlet_smooth = true;      ///< false if the inlet profiles look only Hoelder

  /// Background data plus the cosine families.
  static BoundaryData from_perturbation(const BaseState& base, const Perturbation& pert);
  /// Replaces the inlet entropy and Bernoulli profiles by tabulated data.
  void set_inlet_tables(const BaseState& base, const std::vector<double>& x2,
                        const std::vector<double>& entropy, const std::vector<double>& bernoulli);

  /// Psi_bd = Phi_bd - Phi0 on the entrance and exit.
  std::vector<double> psi_entrance(const BaseState& base) const;
  std::vector<double> psi_exit(const BaseState& base) const;
};

/// U = (Psi, phi, psi).
struct PotentialState {
  ScalarField potential;  ///< Psi = Phi - Phi0
  ScalarField phi;        ///< velocity-potential perturbation
  ScalarField psi;        ///< vortical stream potential

  static PotentialState zero(const Grid2D& g) { return {ScalarField(g), ScalarField(g), ScalarField(g)}; }
};

/// W = (S, K) with the x2-derivatives used by the vorticity source.
struct TransportIterate {
  TransportState w;
  ScalarField d2_entropy;
  ScalarField d2_pseudo;

  static TransportIterate background(const BaseState& base);
};

struct RhsFields {
  VectorField flux;  ///< F
  ScalarField f1;
  ScalarField f2;
  std::vector<double> g;  ///< exit Neumann datum
};

/// Perturbation argument Q = (varsigma, eta, z, q, s) at one node.
struct Increment {
  double varsigma = 0.0;
  double eta = 0.0;
  double z = 0.0;
  Vec2 q{0.0, 0.0};
  Vec2 s{0.0, 0.0};
};

struct PointRhs {
  Vec2 flux;
  double f1_nonlinear;  ///< f1 without the -(b - b0) term
  double density;       ///< B(V0 + Q)
};

/// Flux arguments of V0 + Q at a node with background (Phi0, u).
FluxArgs shifted_args(double s0, double k0, double phi0, double u_bar, const Increment& dq);
/// Telescoped closed form of F and f1 at one node.
PointRhs closed_form_rhs(const StateConstants& sc, double s0, double k0, double phi0, double u_bar,
                         const Increment& dq);
/// The parameter-integral forms evaluated with an n-point Gauss-Legendre rule.
PointRhs quadrature_rhs(const StateConstants& sc, double s0, double k0, double phi0, double u_bar,
                        const Increment& dq, int n_points);

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights);

struct SolverConfig {
  double inner_tol = 1e-10;
  int max_inner = 50;
  /// Accept a stalled inner change below stagnation_factor * inner_tol.
  double stagnation_factor = 1e3;
  double outer_tol = 1e-9;
  int max_outer = 50;
  double linear_tol = 1e-10;
  int linear_max_iter = 20;
  LinearMethod linear_method = LinearMethod::direct_lu;
  bool psi_first = true;          ///< Gauss-Seidel ordering; false evaluates everything at the old iterate
  double damping = 1.0;           ///< initial outer relaxation theta
  double growth_multiple = 10.0;  ///< flag |W - W0| > M sigma
  int coercivity_pairs = 20;
  std::uint64_t seed = 20240601;
  bool debug_checks = false;      ///< quadrature spot checks at 16 nodes per inner sweep
};

struct InnerReport {
  bool converged = false;
  int sweeps = 0;
  std::vector<double> changes;  ///< C1 change per sweep
  std::vector<double> ratios;   ///< change_k / change_{k-1}
  bool roundoff_limited = false;  ///< stopped on stagnation above inner_tol
  double linear_residual = 0.0; ///< worst recomputed coupled residual
  double poisson_residual = 0.0;
  double quadrature_defect = 0.0;  ///< debug mode only
};

struct InnerResult {
  PotentialState u;
  InnerReport report;
};

struct OuterSweep {
  int sweep = 0;
  double change = 0.0;     ///< C1 norm of W_{k+1} - W_k
  double theta = 1.0;
  double deviation = 0.0;  ///< C1 norm of W_{k+1} - W0
  int inner_sweeps = 0;
  double inner_change = 0.0;
  bool inner_roundoff_limited = false;
  double inner_ratio = 0.0;  ///< worst measured inner contraction ratio
  double linear_residual = 0.0;
  double poisson_residual = 0.0;
  double nu_star = 0.0;
  std::size_t clamp_count = 0;
};

struct OuterReport {
  bool converged = false;
  int sweeps = 0;
  std::vector<OuterSweep> history;
  double sigma = 0.0;
  double coercivity = 0.0;  ///< measured nu3 of the assembled coupled form
  bool growth_guard_tripped = false;
  bool inlet_smooth = true;
  double level_set_defect = 0.0;   ///< sup |w - G(L)| / |w| over unclamped nodes
  double inversion_residual = 0.0;
  double max_inner_ratio = 0.0;
  double quadrature_defect = 0.0;
};

/// Reconstructed physical fields.
struct PrimitiveState {
  ScalarField rho, u, v, p, potential, entropy, pseudo, bernoulli;
  double min_axial_velocity = 0.0;
  bool axial_velocity_positive = true;
  double subsonic_margin = 0.0;  ///< min of c^2 - |u|^2
};

struct SolveResult {
  PotentialState u;
  TransportIterate w;
  PrimitiveState primitives;
  VectorField mass_flux;  ///< V of the last transport step
  StreamFunction stream;
  FlowMap flow;
  OuterReport report;
};

/// Thrown when the outer iteration exhausts max_outer; carries the history.
class SolverNotConverged : public Error {
 public:
  SolverNotConverged(const std::string& what, OuterReport report)
      : Error(ErrorCode::not_converged, what), report_(std::move(report)) {}
  const OuterReport& report() const noexcept { return report_; }

 private:
  OuterReport report_;
};

class NozzleSolver {
 public:
  NozzleSolver(BaseState base, SolverConfig config = {});

  const BaseState& base() const noexcept { return base_; }
  const SolverConfig& config() const noexcept { return config_; }
  const CoupledOperator& coupled() const noexcept { return coupled_; }
  const PoissonOperator& poisson() const noexcept { return poisson_; }
  /// Measured coercivity constant of the coupled form.
  double coercivity() const noexcept { return coercivity_; }

  /// F, f1, f2 and g evaluated at (W*, U).
  RhsFields assemble_rhs(const BoundaryData& bd, const TransportIterate& w_star,
                         const PotentialState& u) const;

  InnerResult inner_solve(const BoundaryData& bd, const TransportIterate& w_star,
                          const PotentialState& init) const;

  /// Mass-flux field V = B(V0 + Q)(grad phi0 + grad phi + perp grad psi).
  VectorField mass_flux(const TransportIterate& w_star, const PotentialState& u) const;

  /// Runs the outer map from `init` (background transport fields by default).
  SolveResult outer_iterate(const BoundaryData& bd,
                            const std::optional<TransportIterate>& init = std::nullopt) const;

 private:
  BaseState base_;
  SolverConfig config_;
  CoupledOperator coupled_;
  PoissonOperator poisson_;
  double coercivity_ = 0.0;
};

PrimitiveState reconstruct_primitives(const BaseState& base, const PotentialState& u,
                                      const TransportState& w);

/// Nodes at least this fraction of the unit cross-section (and of L axially)
/// from every boundary form the interior region.
inline constexpr double kInteriorBand = 0.125;

struct ResidualNorm {
  double sup = 0.0;       ///< corner collar excluded
  double l2 = 0.0;
  double interior = 0.0;  ///< sup over the interior region
};

/// Sup norm over nodes at distance >= kInteriorBand from the boundary.
double interior_sup_norm(const ScalarField& f);

struct VerifyReport {
  ResidualNorm mass, momentum1, momentum2, bernoulli_transport, poisson, vorticity;
  double exit_pressure = 0.0;    ///< sup |p - p_ex| on the exit
  double mass_flux_drift = 0.0;  ///< relative to the inlet flux
  double subsonic_margin = 0.0;
  double pseudo_identity = 0.0;  ///< sup |B - Phi - K|
  double gauge = 0.0;            ///< Phi at the anchor node (0, 0)
};

VerifyReport verify_solution(const BaseState& base, const PrimitiveState& ps, const BoundaryData& bd);

/// Field-wise residuals behind `verify_solution`.
struct ResidualFields {
  ScalarField mass, momentum1, momentum2, bernoulli_transport, poisson, vorticity;
};
ResidualFields residual_fields(const BaseState& base, const PrimitiveState& ps,
                               const BoundaryData& bd);

struct Decomposition {
  ScalarField phi;
  ScalarField psi;
};

/// Helmholtz split uv = grad phi + perp grad psi with d1 psi = 0 on the ends
/// and psi = 0 on the walls; phi is the least-squares potential of the rest.
Decomposition decompose_velocity(const VectorField& uv, const PoissonOperator& poisson);
Decomposition decompose_velocity(const VectorField& uv);

/// Sup-norm deviation of the primitives from reference profiles sampled on the
/// same grid (max over rho, u, v, p, Phi).
double primitive_deviation(const PrimitiveState& ps, const BackgroundFields& ref);

}  // namespace epn
