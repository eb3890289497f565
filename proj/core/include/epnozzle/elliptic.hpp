#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "epnozzle/eos.hpp"
#include "epnozzle/error.hpp"
#include "epnozzle/grid.hpp"

namespace epn {

/// Data of the coupled linear problem
///
///   d1(a11 d1 phi + b1 Psi) + d2(a22 d2 phi) = div F
///   Lap Psi - (d Psi + c . grad phi)          = f1
///
/// with phi = 0 on the entrance, d2 phi = 0 on the walls, d1 phi = g on the
/// exit, Psi = Psi_bd on entrance and exit and d2 Psi = 0 on the walls.
struct LinearSystemSpec {
  VectorField flux;                  ///< F
  ScalarField source;                ///< f1
  std::vector<double> exit_neumann;  ///< g at exit nodes j = 0..n2
  std::vector<double> psi_entrance;  ///< Psi_bd(0, x2_j)
  std::vector<double> psi_exit;      ///< Psi_bd(L, x2_j)

  /// Homogeneous data on `grid`.
  static LinearSystemSpec zero(const Grid2D& grid);
};

struct LinearSolveReport {
  double residual_phi = 0.0;  ///< sup of the phi-equation rows, scaled by the rhs magnitude
  double residual_psi = 0.0;  ///< same for the Psi-equation rows
  int iterations = 0;         ///< refinement sweeps (direct) or Krylov iterations
  double energy_ratio = 0.0;  ///< form(x,x) / |x|_{H1}^2 of the homogeneous part
  double wall_seconds = 0.0;

  double residual() const { return residual_phi > residual_psi ? residual_phi : residual_psi; }
};

struct CoupledSolution {
  ScalarField phi;
  ScalarField potential;  ///< Psi
  LinearSolveReport report;
};

/// Thrown when the recomputed residual stays above tolerance; carries the
/// best iterate.
class LinearNotConverged : public Error {
 public:
  LinearNotConverged(const std::string& what, CoupledSolution best)
      : Error(ErrorCode::not_converged, what), best_(std::move(best)) {}
  const CoupledSolution& best() const noexcept { return best_; }

 private:
  CoupledSolution best_;
};

enum class LinearMethod { direct_lu, bicgstab_ilut };

/// Smooth cutoff with chi = 1 on [0, L/3], chi = 0 on [2L/3, L], chi' <= 0 and
/// |chi'| <= 6/L.
double cutoff_chi(double x1, double length);
double cutoff_chi_derivative(double x1, double length);

/// chi(x1) Psi_bd(0, x2) + (1 - chi(x1)) Psi_bd(L, x2).
ScalarField lift_boundary(const Grid2D& grid, const std::vector<double>& psi_entrance,
                          const std::vector<double>& psi_exit);

/// Vertex-centred finite-volume discretisation of the coupled system. The
/// operator is assembled and factorised once; the coefficient fields stay fixed
/// for the lifetime of the object.
///
/// The discrete bilinear form is
///
///   sum over x-edges  w2 h1 [(a11 D1 phi + b1 avg Psi) D1 zeta + D1 Psi D1 omega
///                            + c1 D1 phi avg omega]
/// + sum over y-edges  w1 h2 [a22 D2 phi D2 zeta + D2 Psi D2 omega]
/// + sum over nodes    w1 w2 d Psi omega,
///
/// with edge coefficients averaged from the nodes, so b1 + c1 = 0 on every edge
/// and the coupling terms cancel in form(x, x).
class CoupledOperator {
 public:
  explicit CoupledOperator(CoefficientFields coeffs, LinearMethod method = LinearMethod::direct_lu);
  ~CoupledOperator();
  CoupledOperator(CoupledOperator&&) noexcept;
  CoupledOperator& operator=(CoupledOperator&&) noexcept;

  const Grid2D& grid() const noexcept;
  const CoefficientFields& coefficients() const noexcept;

  /// Throws LinearNotConverged if the residual stays above `tol` after
  /// `max_iter` refinement sweeps (or Krylov iterations).
  CoupledSolution solve(const LinearSystemSpec& spec, double tol = 1e-10, int max_iter = 20) const;

  /// Strong-form rows (form(x, e_p) / cell area) of the operator at every node.
  std::pair<ScalarField, ScalarField> apply(const ScalarField& phi, const ScalarField& potential) const;

  /// Solves apply(phi, Psi) = (rows_phi, rows_psi) at the non-Dirichlet nodes,
  /// with phi = 0 on the entrance and Psi = Psi_bd on entrance and exit.
  CoupledSolution solve_rows(const ScalarField& rows_phi, const ScalarField& rows_psi,
                             const std::vector<double>& psi_entrance,
                             const std::vector<double>& psi_exit, double tol = 1e-10,
                             int max_iter = 20) const;

  /// form((phi, Psi), (zeta, omega)); Dirichlet values are not masked.
  double bilinear(const ScalarField& phi, const ScalarField& potential, const ScalarField& zeta,
                  const ScalarField& omega) const;

  /// Minimum of form(x,x) / (|zeta|_{H1}^2 + |omega|_{H1}^2) over `pairs`
  /// random pairs vanishing on the Dirichlet nodes.
  double measure_coercivity(int pairs, std::uint64_t seed) const;

  void dump_matrix_market(const std::filesystem::path& path) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot convenience wrapper around CoupledOperator.
CoupledSolution solve_coupled(const CoefficientFields& coeffs, const LinearSystemSpec& spec,
                              double tol = 1e-10, int max_iter = 20);

/// Lap psi = rhs with d1 psi = 0 on entrance and exit, psi = 0 on the walls.
/// Assembled and factorised once per grid.
class PoissonOperator {
 public:
  explicit PoissonOperator(const Grid2D& grid);
  ~PoissonOperator();
  PoissonOperator(PoissonOperator&&) noexcept;
  PoissonOperator& operator=(PoissonOperator&&) noexcept;

  const Grid2D& grid() const noexcept;

  /// Throws Error(not_converged) if the scaled residual stays above `tol`.
  ScalarField solve(const ScalarField& rhs, double tol = 1e-10, int max_iter = 20) const;
  /// Strong-form discrete Laplacian consistent with `solve` (walls left at 0).
  ScalarField apply(const ScalarField& psi) const;
  /// Scaled sup residual of `psi` for `rhs` on the non-Dirichlet nodes.
  double residual(const ScalarField& psi, const ScalarField& rhs) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ScalarField solve_poisson(const ScalarField& rhs, double tol = 1e-10);

/// Potential whose edge differences best fit `target` in the area-weighted
/// least-squares sense (a Neumann Laplacian), pinned to 0 at node (0, 0).
ScalarField least_squares_potential(const VectorField& target);

}  // namespace epn
