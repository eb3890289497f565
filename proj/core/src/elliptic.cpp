#include "epnozzle/elliptic.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <unsupported/Eigen/SparseExtra>

namespace epn {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double smooth_step_derivative(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  const double da = a / (t * t);
  const double db = -b / ((1.0 - t) * (1.0 - t));
  return (da * b - a * db) / ((a + b) * (a + b));
}

double cell_area(const Grid2D& g, int i, int j) { return g.weight1(i) * g.weight2(j); }

void require_boundary_size(const Grid2D& g, const std::vector<double>& v, const char* what) {
  if (v.size() != static_cast<std::size_t>(g.ny()))
    throw Error(ErrorCode::grid_mismatch, std::string(what) + " has " + std::to_string(v.size()) +
                                              " entries, grid column has " +
                                              std::to_string(g.ny()));
}

/// Weak-form matrix of the coupled system over all 2N unknowns, phi first.
SpMat assemble_form(const CoefficientFields& cf) {
  const Grid2D& g = cf.grid();
  const auto n = static_cast<int>(g.size());
  const double h1 = g.h1(), h2 = g.h2();
  Triplets t;
  t.reserve(static_cast<std::size_t>(n) * 30);
  auto phi = [&](int i, int j) { return static_cast<int>(g.index(i, j)); };
  auto psi = [&](int i, int j) { return n + static_cast<int>(g.index(i, j)); };
  auto avg = [](const ScalarField& f, std::size_t p, std::size_t q) { return 0.5 * (f[p] + f[q]); };

  // Edge term between nodes p and q along direction with spacing h and
  // cross-width w: test rows pick up +-1/h from the difference, 1/2 from the
  // average.
  auto edge = [&](int pp, int qp, int ps, int qs, double w, double h, double a, double b,
                  double c) {
    const double s = w / h;  // (w h) * (1/h) * (1/h)
    // phi rows: (a D phi + b avg Psi) D zeta
    t.emplace_back(pp, pp, s * a);
    t.emplace_back(pp, qp, -s * a);
    t.emplace_back(qp, pp, -s * a);
    t.emplace_back(qp, qp, s * a);
    const double sb = 0.5 * w * b;  // (w h) * (1/h) * (1/2)
    t.emplace_back(pp, ps, -sb);
    t.emplace_back(pp, qs, -sb);
    t.emplace_back(qp, ps, sb);
    t.emplace_back(qp, qs, sb);
    // Psi rows: D Psi D omega + c D phi avg omega
    t.emplace_back(ps, ps, s);
    t.emplace_back(ps, qs, -s);
    t.emplace_back(qs, ps, -s);
    t.emplace_back(qs, qs, s);
    const double sc = 0.5 * w * c;
    t.emplace_back(ps, pp, -sc);
    t.emplace_back(ps, qp, sc);
    t.emplace_back(qs, pp, -sc);
    t.emplace_back(qs, qp, sc);
  };

  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      t.emplace_back(psi(i, j), psi(i, j), cell_area(g, i, j) * cf.d[k]);
      if (i < g.n1()) {
        const std::size_t q = g.index(i + 1, j);
        edge(phi(i, j), phi(i + 1, j), psi(i, j), psi(i + 1, j), g.weight2(j), h1,
             avg(cf.a11, k, q), avg(cf.b1, k, q), avg(cf.c1, k, q));
      }
      if (j < g.n2()) {
        const std::size_t q = g.index(i, j + 1);
        edge(phi(i, j), phi(i, j + 1), psi(i, j), psi(i, j + 1), g.weight1(i), h2,
             avg(cf.a22, k, q), avg(cf.b2, k, q), avg(cf.c2, k, q));
      }
    }
  }
  SpMat m(2 * n, 2 * n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

double sup_abs(const Vec& v, Eigen::Index from, Eigen::Index count) {
  return count > 0 ? v.segment(from, count).cwiseAbs().maxCoeff() : 0.0;
}

Vec to_vec(const ScalarField& a, const ScalarField& b) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Vec x(2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    x[k] = a[static_cast<std::size_t>(k)];
    x[n + k] = b[static_cast<std::size_t>(k)];
  }
  return x;
}

}  // namespace

double cutoff_chi(double x1, double length) {
  const double third = length / 3.0;
  return 1.0 - smooth_step((x1 - third) / third);
}

double cutoff_chi_derivative(double x1, double length) {
  const double third = length / 3.0;
  return -smooth_step_derivative((x1 - third) / third) / third;
}

ScalarField lift_boundary(const Grid2D& grid, const std::vector<double>& psi_entrance,
                          const std::vector<double>& psi_exit) {
  require_boundary_size(grid, psi_entrance, "entrance data");
  require_boundary_size(grid, psi_exit, "exit data");
  ScalarField f(grid);
  for (int i = 0; i < grid.nx(); ++i) {
    const double chi = i == 0 ? 1.0 : i == grid.n1() ? 0.0 : cutoff_chi(grid.x1(i), grid.length());
    for (int j = 0; j < grid.ny(); ++j) {
      const auto jj = static_cast<std::size_t>(j);
      f(i, j) = chi * psi_entrance[jj] + (1.0 - chi) * psi_exit[jj];
    }
  }
  return f;
}

LinearSystemSpec LinearSystemSpec::zero(const Grid2D& grid) {
  const auto ny = static_cast<std::size_t>(grid.ny());
  return {VectorField(grid), ScalarField(grid), std::vector<double>(ny, 0.0),
          std::vector<double>(ny, 0.0), std::vector<double>(ny, 0.0)};
}

// ---------------------------------------------------------------------------

struct CoupledOperator::Impl {
  CoefficientFields coeffs;
  LinearMethod method;
  SpMat form;
  SpMat system;
  std::vector<char> dirichlet;
  Vec inv_area;
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  mutable Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> krylov;

  Impl(CoefficientFields cf, LinearMethod m) : coeffs(std::move(cf)), method(m) {}

  Eigen::Index n() const { return static_cast<Eigen::Index>(coeffs.grid().size()); }

  /// Solves system * x = b; Dirichlet rows of b carry the boundary values.
  Vec solve_system(const Vec& b, double tol, int max_iter, LinearSolveReport& rep) const {
    const Eigen::Index nn = n();
    const double scale = b.cwiseAbs().maxCoeff();
    Vec x = Vec::Zero(b.size());
    auto measure = [&](const Vec& r) {
      const double s = scale > 0.0 ? scale : 1.0;
      rep.residual_phi = sup_abs(r, 0, nn) / s;
      rep.residual_psi = sup_abs(r, nn, nn) / s;
    };
    if (scale == 0.0) {
      measure(Vec::Zero(b.size()));
      return x;
    }
    Vec r = b;
    for (int it = 0; it < max_iter; ++it) {
      if (method == LinearMethod::direct_lu) {
        x += lu.solve(r);
        rep.iterations = it + 1;
      } else {
        krylov.setTolerance(0.1 * tol);
        krylov.setMaxIterations(1000);
        x = krylov.solveWithGuess(b, x);
        rep.iterations += static_cast<int>(krylov.iterations());
      }
      r = b - system * x;
      measure(r);
      if (!x.allFinite()) break;
      if (rep.residual() <= tol) break;
    }
    return x;
  }

  CoupledSolution finish(const Vec& b, const ScalarField& lift, double tol, int max_iter) const {
    const auto t0 = std::chrono::steady_clock::now();
    const Grid2D& g = coeffs.grid();
    LinearSolveReport rep;
    const Vec x = solve_system(b, tol, max_iter, rep);
    CoupledSolution out{ScalarField(g), ScalarField(g), rep};
    const Eigen::Index nn = n();
    ScalarField hat(g);
    for (Eigen::Index k = 0; k < nn; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      out.phi[kk] = x[k];
      hat[kk] = x[nn + k];
      out.potential[kk] = x[nn + k] + lift[kk];
    }
    const double norm = h1_norm_sq(out.phi) + h1_norm_sq(hat);
    out.report.energy_ratio = norm > 0.0 ? x.dot(form * x) / norm : 0.0;
    out.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!x.allFinite() || !(out.report.residual() <= tol))
      throw LinearNotConverged("coupled solve residual " + format_value(out.report.residual()) +
                                   " above tolerance " + format_value(tol),
                               out);
    return out;
  }
};

CoupledOperator::CoupledOperator(CoefficientFields coeffs, LinearMethod method)
    : impl_(std::make_unique<Impl>(std::move(coeffs), method)) {
  const CoefficientFields& cf = impl_->coeffs;
  const Grid2D& g = cf.grid();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(cf.a11[k] > 0.0) || !(cf.a22[k] > 0.0) || !(cf.d[k] > 0.0) ||
        !std::isfinite(cf.b1[k]) || !std::isfinite(cf.b2[k]) || !std::isfinite(cf.c1[k]) ||
        !std::isfinite(cf.c2[k]))
      throw Error(ErrorCode::ill_posed_coefficients,
                  "coupled operator needs a11, a22, d > 0 and finite coupling coefficients");
  }

  const Eigen::Index nn = impl_->n();
  impl_->form = assemble_form(cf);
  impl_->dirichlet.assign(static_cast<std::size_t>(2 * nn), 0);
  impl_->inv_area.resize(nn);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const auto k = g.index(i, j);
      impl_->inv_area[static_cast<Eigen::Index>(k)] = 1.0 / cell_area(g, i, j);
      if (i == 0) impl_->dirichlet[k] = 1;
      if (i == 0 || i == g.n1()) impl_->dirichlet[static_cast<std::size_t>(nn) + k] = 1;
    }

  Triplets t;
  t.reserve(static_cast<std::size_t>(impl_->form.nonZeros()) + static_cast<std::size_t>(2 * nn));
  for (int col = 0; col < impl_->form.outerSize(); ++col)
    for (SpMat::InnerIterator it(impl_->form, col); it; ++it) {
      const auto row = static_cast<std::size_t>(it.row());
      if (impl_->dirichlet[row]) continue;
      t.emplace_back(it.row(), it.col(), it.value() * impl_->inv_area[it.row() % nn]);
    }
  for (Eigen::Index r = 0; r < 2 * nn; ++r)
    if (impl_->dirichlet[static_cast<std::size_t>(r)]) t.emplace_back(r, r, 1.0);
  impl_->system.resize(2 * nn, 2 * nn);
  impl_->system.setFromTriplets(t.begin(), t.end());
  impl_->system.makeCompressed();

  if (method == LinearMethod::direct_lu) {
    impl_->lu.compute(impl_->system);
    if (impl_->lu.info() != Eigen::Success)
      throw Error(ErrorCode::ill_posed_coefficients,
                  "sparse LU factorisation failed: " + impl_->lu.lastErrorMessage());
  } else {
    impl_->krylov.preconditioner().setDroptol(1e-6);
    impl_->krylov.preconditioner().setFillfactor(20);
    impl_->krylov.compute(impl_->system);
    if (impl_->krylov.info() != Eigen::Success)
      throw Error(ErrorCode::ill_posed_coefficients, "ILUT preconditioner setup failed");
  }
}

CoupledOperator::~CoupledOperator() = default;
CoupledOperator::CoupledOperator(CoupledOperator&&) noexcept = default;
CoupledOperator& CoupledOperator::operator=(CoupledOperator&&) noexcept = default;

const Grid2D& CoupledOperator::grid() const noexcept { return impl_->coeffs.grid(); }
const CoefficientFields& CoupledOperator::coefficients() const noexcept { return impl_->coeffs; }

std::pair<ScalarField, ScalarField> CoupledOperator::apply(const ScalarField& phi,
                                                           const ScalarField& potential) const {
  const Grid2D& g = grid();
  if (!(phi.grid() == g) || !(potential.grid() == g))
    throw Error(ErrorCode::grid_mismatch, "field grid differs from the operator grid");
  const Vec y = impl_->form * to_vec(phi, potential);
  const Eigen::Index nn = impl_->n();
  std::pair<ScalarField, ScalarField> out{ScalarField(g), ScalarField(g)};
  for (Eigen::Index k = 0; k < nn; ++k) {
    out.first[static_cast<std::size_t>(k)] = y[k] * impl_->inv_area[k];
    out.second[static_cast<std::size_t>(k)] = y[nn + k] * impl_->inv_area[k];
  }
  return out;
}

double CoupledOperator::bilinear(const ScalarField& phi, const ScalarField& potential,
                                 const ScalarField& zeta, const ScalarField& omega) const {
  return to_vec(zeta, omega).dot(impl_->form * to_vec(phi, potential));
}

CoupledSolution CoupledOperator::solve_rows(const ScalarField& rows_phi, const ScalarField& rows_psi,
                                            const std::vector<double>& psi_entrance,
                                            const std::vector<double>& psi_exit, double tol,
                                            int max_iter) const {
  const Grid2D& g = grid();
  if (!(rows_phi.grid() == g) || !(rows_psi.grid() == g))
    throw Error(ErrorCode::grid_mismatch, "rhs grid differs from the operator grid");
  const ScalarField lift = lift_boundary(g, psi_entrance, psi_exit);
  const Eigen::Index nn = impl_->n();
  const Vec lifted = impl_->form * to_vec(ScalarField(g), lift);
  Vec b(2 * nn);
  for (Eigen::Index k = 0; k < nn; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    b[k] = rows_phi[kk] - lifted[k] * impl_->inv_area[k];
    b[nn + k] = rows_psi[kk] - lifted[nn + k] * impl_->inv_area[k];
  }
  for (Eigen::Index r = 0; r < 2 * nn; ++r)
    if (impl_->dirichlet[static_cast<std::size_t>(r)]) b[r] = 0.0;
  return impl_->finish(b, lift, tol, max_iter);
}

CoupledSolution CoupledOperator::solve(const LinearSystemSpec& spec, double tol, int max_iter) const {
  const Grid2D& g = grid();
  if (!(spec.flux.grid() == g) || !(spec.source.grid() == g))
    throw Error(ErrorCode::grid_mismatch, "linear data grid differs from the operator grid");
  require_boundary_size(g, spec.exit_neumann, "exit Neumann data");
  const CoefficientFields& cf = impl_->coeffs;
  const ScalarField& f1 = spec.flux.c1;
  const ScalarField& f2 = spec.flux.c2;

  // Load functional: int F . grad zeta - int_bd (F . n) zeta + exit flux,
  // i.e. minus the outward flux of F through each control volume.
  ScalarField rows_phi(g), rows_psi(g);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const auto k = g.index(i, j);
      const double east = i < g.n1() ? 0.5 * (f1[k] + f1(i + 1, j)) : f1[k];
      const double west = i > 0 ? 0.5 * (f1[k] + f1(i - 1, j)) : f1[k];
      const double north = j < g.n2() ? 0.5 * (f2[k] + f2(i, j + 1)) : f2[k];
      const double south = j > 0 ? 0.5 * (f2[k] + f2(i, j - 1)) : f2[k];
      double load = -(g.weight2(j) * (east - west) + g.weight1(i) * (north - south));
      if (i == g.n1()) {
        const auto jj = static_cast<std::size_t>(j);
        load += g.weight2(j) * (cf.a11[k] * spec.exit_neumann[jj] + cf.b1[k] * spec.psi_exit[jj]);
      }
      const double area = cell_area(g, i, j);
      rows_phi[k] = load / area;
      rows_psi[k] = -spec.source[k];
    }
  return solve_rows(rows_phi, rows_psi, spec.psi_entrance, spec.psi_exit, tol, max_iter);
}

double CoupledOperator::measure_coercivity(int pairs, std::uint64_t seed) const {
  const Grid2D& g = grid();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double pi = std::acos(-1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (int p = 0; p < pairs; ++p) {
    ScalarField zeta(g), omega(g);
    if (p % 2 == 0) {
      for (std::size_t k = 0; k < g.size(); ++k) {
        zeta[k] = uni(rng);
        omega[k] = uni(rng);
      }
    } else {
      // A few random low modes.
      for (int m = 0; m < 4; ++m) {
        const double az = uni(rng), ao = uni(rng);
        const int kx = 1 + m, ky = m;
        for (int j = 0; j < g.ny(); ++j)
          for (int i = 0; i < g.nx(); ++i) {
            const double s = g.x1(i) / g.length(), y = g.x2(j);
            zeta(i, j) += az * std::sin(0.5 * pi * kx * s) * std::cos(pi * ky * y);
            omega(i, j) += ao * std::sin(pi * kx * s) * std::cos(pi * ky * y);
          }
      }
    }
    for (int j = 0; j < g.ny(); ++j) {
      zeta(0, j) = 0.0;
      omega(0, j) = 0.0;
      omega(g.n1(), j) = 0.0;
    }
    const double norm = h1_norm_sq(zeta) + h1_norm_sq(omega);
    if (norm > 0.0) worst = std::min(worst, bilinear(zeta, omega, zeta, omega) / norm);
  }
  return worst;
}

void CoupledOperator::dump_matrix_market(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!Eigen::saveMarket(impl_->system, path.string()))
    throw Error(ErrorCode::io_error, "cannot write " + path.string());
}

CoupledSolution solve_coupled(const CoefficientFields& coeffs, const LinearSystemSpec& spec,
                              double tol, int max_iter) {
  return CoupledOperator(coeffs).solve(spec, tol, max_iter);
}

// ---------------------------------------------------------------------------

struct PoissonOperator::Impl {
  Grid2D grid;
  SpMat form;                  // weak-form Laplacian (positive), all nodes
  std::vector<int> free_index; // node -> reduced index, -1 on the walls
  std::vector<std::size_t> free_nodes;
  SpMat reduced;
  Eigen::SimplicialLDLT<SpMat> ldlt;

  explicit Impl(const Grid2D& g) : grid(g) {}

  bool is_wall(int j) const { return j == 0 || j == grid.n2(); }

  Vec residual_vec(const ScalarField& psi, const ScalarField& rhs) const {
    Vec x = Eigen::Map<const Vec>(psi.values().data(), static_cast<Eigen::Index>(psi.size()));
    const Vec y = form * x;
    Vec r(static_cast<Eigen::Index>(free_nodes.size()));
    for (std::size_t f = 0; f < free_nodes.size(); ++f) {
      const std::size_t k = free_nodes[f];
      const int i = static_cast<int>(k % static_cast<std::size_t>(grid.nx()));
      const int j = static_cast<int>(k / static_cast<std::size_t>(grid.nx()));
      r[static_cast<Eigen::Index>(f)] =
          -y[static_cast<Eigen::Index>(k)] / cell_area(grid, i, j) - rhs[k];
    }
    return r;
  }

  double rhs_scale(const ScalarField& rhs) const {
    double s = 0.0;
    for (std::size_t k : free_nodes) s = std::max(s, std::abs(rhs[k]));
    return s;
  }
};

PoissonOperator::PoissonOperator(const Grid2D& grid) : impl_(std::make_unique<Impl>(grid)) {
  const Grid2D& g = impl_->grid;
  const double h1 = g.h1(), h2 = g.h2();
  Triplets t;
  auto add_edge = [&](std::size_t p, std::size_t q, double s) {
    const auto ip = static_cast<int>(p), iq = static_cast<int>(q);
    t.emplace_back(ip, ip, s);
    t.emplace_back(ip, iq, -s);
    t.emplace_back(iq, ip, -s);
    t.emplace_back(iq, iq, s);
  };
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      if (i < g.n1()) add_edge(g.index(i, j), g.index(i + 1, j), g.weight2(j) / h1);
      if (j < g.n2()) add_edge(g.index(i, j), g.index(i, j + 1), g.weight1(i) / h2);
    }
  const auto n = static_cast<Eigen::Index>(g.size());
  impl_->form.resize(n, n);
  impl_->form.setFromTriplets(t.begin(), t.end());

  impl_->free_index.assign(g.size(), -1);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      if (!impl_->is_wall(j)) {
        impl_->free_index[g.index(i, j)] = static_cast<int>(impl_->free_nodes.size());
        impl_->free_nodes.push_back(g.index(i, j));
      }
  Triplets rt;
  for (int col = 0; col < impl_->form.outerSize(); ++col)
    for (SpMat::InnerIterator it(impl_->form, col); it; ++it) {
      const int r = impl_->free_index[static_cast<std::size_t>(it.row())];
      const int c = impl_->free_index[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) rt.emplace_back(r, c, it.value());
    }
  const auto nf = static_cast<Eigen::Index>(impl_->free_nodes.size());
  impl_->reduced.resize(nf, nf);
  impl_->reduced.setFromTriplets(rt.begin(), rt.end());
  impl_->ldlt.compute(impl_->reduced);
  if (impl_->ldlt.info() != Eigen::Success)
    throw Error(ErrorCode::ill_posed_coefficients, "Poisson factorisation failed");
}

PoissonOperator::~PoissonOperator() = default;
PoissonOperator::PoissonOperator(PoissonOperator&&) noexcept = default;
PoissonOperator& PoissonOperator::operator=(PoissonOperator&&) noexcept = default;

const Grid2D& PoissonOperator::grid() const noexcept { return impl_->grid; }

ScalarField PoissonOperator::apply(const ScalarField& psi) const {
  const Grid2D& g = impl_->grid;
  if (!(psi.grid() == g)) throw Error(ErrorCode::grid_mismatch, "Poisson field grid mismatch");
  Vec x = Eigen::Map<const Vec>(psi.values().data(), static_cast<Eigen::Index>(psi.size()));
  const Vec y = impl_->form * x;
  ScalarField out(g);
  for (int j = 1; j < g.n2(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      out(i, j) = -y[static_cast<Eigen::Index>(g.index(i, j))] / cell_area(g, i, j);
  return out;
}

double PoissonOperator::residual(const ScalarField& psi, const ScalarField& rhs) const {
  const double s = impl_->rhs_scale(rhs);
  const Vec r = impl_->residual_vec(psi, rhs);
  const double sup = r.size() > 0 ? r.cwiseAbs().maxCoeff() : 0.0;
  return sup / (s > 0.0 ? s : 1.0);
}

ScalarField PoissonOperator::solve(const ScalarField& rhs, double tol, int max_iter) const {
  const Grid2D& g = impl_->grid;
  if (!(rhs.grid() == g)) throw Error(ErrorCode::grid_mismatch, "Poisson rhs grid mismatch");
  ScalarField psi(g);
  if (impl_->rhs_scale(rhs) == 0.0) return psi;
  const auto nf = static_cast<Eigen::Index>(impl_->free_nodes.size());
  Vec b(nf);
  for (Eigen::Index f = 0; f < nf; ++f) {
    const std::size_t k = impl_->free_nodes[static_cast<std::size_t>(f)];
    const int i = static_cast<int>(k % static_cast<std::size_t>(g.nx()));
    const int j = static_cast<int>(k / static_cast<std::size_t>(g.nx()));
    b[f] = -cell_area(g, i, j) * rhs[k];
  }
  Vec x = Vec::Zero(nf);
  Vec r = b;
  double res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    x += impl_->ldlt.solve(r);
    r = b - impl_->reduced * x;
    for (Eigen::Index f = 0; f < nf; ++f) psi[impl_->free_nodes[static_cast<std::size_t>(f)]] = x[f];
    res = residual(psi, rhs);
    if (res <= tol) return psi;
  }
  throw Error(ErrorCode::not_converged,
              "Poisson residual " + format_value(res) + " above tolerance " + format_value(tol));
}

ScalarField solve_poisson(const ScalarField& rhs, double tol) {
  return PoissonOperator(rhs.grid()).solve(rhs, tol);
}

ScalarField least_squares_potential(const VectorField& target) {
  const Grid2D& g = target.grid();
  const auto n = static_cast<Eigen::Index>(g.size());
  Triplets t;
  t.reserve(static_cast<std::size_t>(n) * 5);
  Vec b = Vec::Zero(n);
  // Node 0 is pinned; its row and column are replaced by the identity.
  auto add = [&](std::size_t p, std::size_t q, double w, double h, double gbar) {
    const auto pi = static_cast<Eigen::Index>(p), qi = static_cast<Eigen::Index>(q);
    const double s = w / (h * h);
    if (pi != 0) {
      t.emplace_back(pi, pi, s);
      if (qi != 0) t.emplace_back(pi, qi, -s);
      b[pi] -= w / h * gbar;
    }
    if (qi != 0) {
      t.emplace_back(qi, qi, s);
      if (pi != 0) t.emplace_back(qi, pi, -s);
      b[qi] += w / h * gbar;
    }
  };
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      if (i < g.n1()) {
        const std::size_t q = g.index(i + 1, j);
        add(k, q, g.weight2(j) * g.h1(), g.h1(), 0.5 * (target.c1[k] + target.c1[q]));
      }
      if (j < g.n2()) {
        const std::size_t q = g.index(i, j + 1);
        add(k, q, g.weight1(i) * g.h2(), g.h2(), 0.5 * (target.c2[k] + target.c2[q]));
      }
    }
  t.emplace_back(0, 0, 1.0);
  SpMat m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<SpMat> ldlt(m);
  if (ldlt.info() != Eigen::Success)
    throw Error(ErrorCode::ill_posed_coefficients, "least-squares potential factorisation failed");
  const Vec x = ldlt.solve(b);
  ScalarField out(g);
  for (Eigen::Index k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = x[k];
  return out;
}

}  // namespace epn
