#include "epnozzle/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace epn {

namespace {

constexpr double kPi = 3.14159265358979323846;

double c1_norm_1d(const std::vector<double>& v, double h) {
  double sup = 0.0, slope = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    sup = std::max(sup, std::abs(v[k]));
    if (k > 0) slope = std::max(slope, std::abs(v[k] - v[k - 1]) / h);
  }
  return sup + slope;
}

std::vector<double> sample_profile(const Grid2D& g, const InletProfile& p) {
  std::vector<double> out(static_cast<std::size_t>(g.ny()));
  for (int j = 0; j < g.ny(); ++j) out[static_cast<std::size_t>(j)] = p.value(g.x2(j));
  return out;
}

std::vector<double> minus_constant(std::vector<double> v, double c) {
  for (double& x : v) x -= c;
  return v;
}

InletProfile difference(const InletProfile& a, const InletProfile& b) {
  return InletProfile::closed_form([a, b](double t) { return a.value(t) - b.value(t); },
                                   [a, b](double t) { return a.derivative(t) - b.derivative(t); });
}

double max_c1_change(const ScalarField& a, const ScalarField& b) { return c1_norm(a - b); }

Increment increment_at(const BaseState& base, const TransportIterate& w, const PotentialState& u,
                       const VectorField& q, const VectorField& s, std::size_t k) {
  Increment dq;
  dq.varsigma = w.w.entropy[k] - base.background.params.s0;
  dq.eta = w.w.pseudo_bernoulli[k] - base.k0;
  dq.z = u.potential[k];
  dq.q = {q.c1[k], q.c2[k]};
  dq.s = {s.c1[k], s.c2[k]};
  return dq;
}

}  // namespace

// ---------------------------------------------------------------------------

BaseState BaseState::build(const BackgroundParams& params, int n1, int n2) {
  Grid2D grid(n1, n2, params.length);
  BackgroundSolution bg = solve_background(params, n1);
  const StateConstants sc = StateConstants::from(params);
  BackgroundFields fields = sample_background(bg, grid);
  CoefficientFields coeffs = background_coefficients(fields, sc, params.s0);
  const double k0 = bg.bernoulli(0) - bg.elec_potential.front();
  const double u_exit = bg.u.back();
  const double p_exit = bg.p.back();
  return BaseState{std::move(bg), grid, sc, std::move(fields), std::move(coeffs), k0, u_exit, p_exit};
}

Perturbation Perturbation::uniform(double a) {
  Perturbation p;
  p.potential = p.pressure = p.entropy = p.bernoulli = p.charge = a;
  return p;
}

Perturbation Perturbation::scaled(double s) const {
  Perturbation p = *this;
  p.potential *= s;
  p.pressure *= s;
  p.entropy *= s;
  p.bernoulli *= s;
  p.charge *= s;
  return p;
}

BoundaryData BoundaryData::from_perturbation(const BaseState& base, const Perturbation& pert) {
  const Grid2D& g = base.grid;
  const BackgroundParams& prm = base.background.params;
  const double length = g.length();
  const double b0 = prm.b0, s0 = prm.s0;
  const double bern0 = base.background.bernoulli(0);
  const double phi_in = base.background.elec_potential.front();
  const double phi_out = base.background.elec_potential.back();

  const double a_b = pert.charge;
  ScalarField charge = ScalarField::from_function(g, [&](double x1, double x2) {
    return b0 + a_b * std::cos(kPi * x2) * std::cos(kPi * x1 / length);
  });

  const double a_s = pert.entropy, a_bern = pert.bernoulli;
  const double a_en = pert.potential * pert.potential_entrance_weight;
  const double a_ex = pert.potential * pert.potential_exit_weight;
  auto cosine = [](double c, double a) {
    return InletProfile::closed_form([c, a](double t) { return c + a * std::cos(kPi * t); },
                                     [a](double t) { return -a * kPi * std::sin(kPi * t); });
  };
  // The entrance mode vanishes at the anchor (0, 0) to keep the gauge.
  InletProfile phi_en = InletProfile::closed_form(
      [phi_in, a_en](double t) { return phi_in + a_en * (std::cos(kPi * t) - 1.0); },
      [a_en](double t) { return -a_en * kPi * std::sin(kPi * t); });
  InletProfile phi_ex = cosine(phi_out, a_ex);
  InletProfile s_en = cosine(s0, a_s);
  InletProfile b_en = cosine(bern0, a_bern);
  InletProfile p_ex = cosine(base.p_exit, pert.pressure);

  BoundaryData bd{std::move(charge),
                  s_en,
                  b_en,
                  difference(b_en, phi_en),
                  phi_en,
                  sample_profile(g, phi_en),
                  sample_profile(g, phi_ex),
                  sample_profile(g, p_ex),
                  0.0,
                  true};

  const double h2 = g.h2();
  ScalarField db = bd.charge;
  for (std::size_t k = 0; k < db.size(); ++k) db[k] -= b0;
  bd.sigma = c1_norm(db) + c1_norm_1d(minus_constant(sample_profile(g, s_en), s0), h2) +
             c1_norm_1d(minus_constant(sample_profile(g, b_en), bern0), h2) +
             c1_norm_1d(minus_constant(bd.potential_en, phi_in), h2) +
             c1_norm_1d(minus_constant(bd.potential_ex, phi_out), h2) +
             c1_norm_1d(minus_constant(bd.pressure_ex, base.p_exit), h2);
  return bd;
}

void BoundaryData::set_inlet_tables(const BaseState& base, const std::vector<double>& x2,
                                    const std::vector<double>& entropy,
                                    const std::vector<double>& bernoulli) {
  if (x2.size() != entropy.size() || x2.size() != bernoulli.size() || x2.size() < 3)
    throw Error(ErrorCode::invalid_argument, "inlet table needs at least 3 rows of (x2, S, B)");
  if (std::abs(x2.front()) > 1e-12 || std::abs(x2.back() - 1.0) > 1e-12)
    throw Error(ErrorCode::invalid_argument, "inlet table must span x2 in [0, 1]");
  const Grid2D& g = base.grid;
  const BackgroundParams& prm = base.background.params;
  const double bern0 = base.background.bernoulli(0);
  const double s_old_dev = c1_norm_1d(minus_constant(sample_profile(g, entropy_en), prm.s0), g.h2());
  const double b_old_dev = c1_norm_1d(minus_constant(sample_profile(g, bernoulli_en), bern0), g.h2());

  entropy_en = InletProfile::tabulated(x2, entropy);
  bernoulli_en = InletProfile::tabulated(x2, bernoulli);
  pseudo_en = difference(bernoulli_en, potential_en_profile);
  inlet_smooth = entropy_en.smooth() && bernoulli_en.smooth();
  sigma += c1_norm_1d(minus_constant(sample_profile(g, entropy_en), prm.s0), g.h2()) - s_old_dev;
  sigma += c1_norm_1d(minus_constant(sample_profile(g, bernoulli_en), bern0), g.h2()) - b_old_dev;
}

std::vector<double> BoundaryData::psi_entrance(const BaseState& base) const {
  return minus_constant(potential_en, base.background.elec_potential.front());
}

std::vector<double> BoundaryData::psi_exit(const BaseState& base) const {
  return minus_constant(potential_ex, base.background.elec_potential.back());
}

TransportIterate TransportIterate::background(const BaseState& base) {
  const Grid2D& g = base.grid;
  return {TransportState{ScalarField(g, base.background.params.s0), ScalarField(g, base.k0)},
          ScalarField(g), ScalarField(g)};
}

// ---------------------------------------------------------------------------

FluxArgs shifted_args(double s0, double k0, double phi0, double u_bar, const Increment& dq) {
  FluxArgs a;
  a.entropy = s0 + dq.varsigma;
  a.pseudo_bernoulli = k0 + dq.eta;
  a.potential = phi0 + dq.z;
  a.q = {u_bar + dq.q[0], dq.q[1]};
  a.s = dq.s;
  return a;
}

PointRhs closed_form_rhs(const StateConstants& sc, double s0, double k0, double phi0, double u_bar,
                         const Increment& dq) {
  const FluxArgs base = shifted_args(s0, k0, phi0, u_bar, Increment{});
  const FluxValues v0 = eval_AB(sc, base);
  const FluxValues vq = eval_AB(sc, shifted_args(s0, k0, phi0, u_bar, dq));
  const FluxDerivatives d0 = eval_AB_derivatives(sc, base);
  auto linear = [&](const std::array<double, kFluxSlots>& d) {
    return d[kZ] * dq.z + d[kQ1] * dq.q[0] + d[kQ2] * dq.q[1];
  };
  const Vec2 sperp{dq.s[1], -dq.s[0]};
  PointRhs out;
  out.flux[0] = -(vq.a[0] - v0.a[0] - linear(d0.da1)) - vq.b * sperp[0];
  out.flux[1] = -(vq.a[1] - v0.a[1] - linear(d0.da2)) - vq.b * sperp[1];
  out.f1_nonlinear = vq.b - v0.b - linear(d0.db);
  out.density = vq.b;
  return out;
}

void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto k = static_cast<std::size_t>(i);
    nodes[k] = 0.5 * (1.0 - x);
    weights[k] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

PointRhs quadrature_rhs(const StateConstants& sc, double s0, double k0, double phi0, double u_bar,
                        const Increment& dq, int n_points) {
  std::vector<double> t, w;
  gauss_legendre_unit(n_points, t, w);
  const std::array<double, kFluxSlots> qv{dq.varsigma, dq.eta, dq.z, dq.q[0], dq.q[1], dq.s[0],
                                          dq.s[1]};
  const FluxDerivatives d0 = eval_AB_derivatives(sc, shifted_args(s0, k0, phi0, u_bar, Increment{}));
  const int transported[] = {kEntropy, kEta, kS1, kS2};
  const int linearised[] = {kZ, kQ1, kQ2};
  double ia1 = 0.0, ia2 = 0.0, ib = 0.0;
  for (std::size_t m = 0; m < t.size(); ++m) {
    Increment scaled = dq;
    scaled.varsigma *= t[m];
    scaled.eta *= t[m];
    scaled.z *= t[m];
    scaled.q = {dq.q[0] * t[m], dq.q[1] * t[m]};
    scaled.s = {dq.s[0] * t[m], dq.s[1] * t[m]};
    const FluxDerivatives d = eval_AB_derivatives(sc, shifted_args(s0, k0, phi0, u_bar, scaled));
    double a1 = 0.0, a2 = 0.0, b = 0.0;
    for (int slot : transported) {
      a1 += d.da1[slot] * qv[slot];
      a2 += d.da2[slot] * qv[slot];
      b += d.db[slot] * qv[slot];
    }
    for (int slot : linearised) {
      a1 += (d.da1[slot] - d0.da1[slot]) * qv[slot];
      a2 += (d.da2[slot] - d0.da2[slot]) * qv[slot];
      b += (d.db[slot] - d0.db[slot]) * qv[slot];
    }
    ia1 += w[m] * a1;
    ia2 += w[m] * a2;
    ib += w[m] * b;
  }
  const FluxValues vq = eval_AB(sc, shifted_args(s0, k0, phi0, u_bar, dq));
  const Vec2 sperp{dq.s[1], -dq.s[0]};
  return {{-ia1 - vq.b * sperp[0], -ia2 - vq.b * sperp[1]}, ib, vq.b};
}

// ---------------------------------------------------------------------------

NozzleSolver::NozzleSolver(BaseState base, SolverConfig config)
    : base_(std::move(base)),
      config_(config),
      coupled_(base_.coefficients, config.linear_method),
      poisson_(base_.grid) {
  if (!(config_.damping > 0.0 && config_.damping <= 1.0))
    throw Error(ErrorCode::invalid_argument, "outer damping must lie in (0, 1]");
  coercivity_ = coupled_.measure_coercivity(config_.coercivity_pairs, config_.seed);
  if (!(coercivity_ > 0.0))
    throw Error(ErrorCode::ill_posed_coefficients,
                "assembled coupled form is not coercive (nu3 = " + format_value(coercivity_) + ")");
}

RhsFields NozzleSolver::assemble_rhs(const BoundaryData& bd, const TransportIterate& w_star,
                                     const PotentialState& u) const {
  const Grid2D& g = base_.grid;
  const StateConstants& sc = base_.constants;
  const BackgroundParams& prm = base_.background.params;
  const VectorField q = gradient(u.phi);
  const VectorField s = gradient(u.psi);
  RhsFields out{VectorField(g), ScalarField(g), ScalarField(g),
                std::vector<double>(static_cast<std::size_t>(g.ny()), 0.0)};

  for (std::size_t k = 0; k < g.size(); ++k) {
    const Increment dq = increment_at(base_, w_star, u, q, s, k);
    const double phi0 = base_.fields.elec_potential[k];
    const double u_bar = base_.fields.u[k];
    const PointRhs r = closed_form_rhs(sc, prm.s0, base_.k0, phi0, u_bar, dq);
    out.flux.c1[k] = r.flux[0];
    out.flux.c2[k] = r.flux[1];
    out.f1[k] = r.f1_nonlinear - (bd.charge[k] - prm.b0);
    const double axial = u_bar + dq.q[0] + dq.s[1];
    if (!(axial > 0.0))
      throw Error(ErrorCode::degenerate_axial_velocity,
                  "axial velocity " + format_value(axial) + " in the vorticity source");
    const double temp = eval_T(sc, r.density, prm.s0 + dq.varsigma);
    out.f2[k] = -(temp * w_star.d2_entropy[k] - w_star.d2_pseudo[k]) / axial;
  }

  const std::vector<double> psi_ex = bd.psi_exit(base_);
  const double gm = sc.gamma;
  const double ul = base_.u_exit;
  const double ref = std::pow(base_.p_exit, (gm - 1.0) / gm) *
                     std::pow(sc.entropy_scale(prm.s0), 1.0 / gm);
  for (int j = 0; j < g.ny(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    const std::size_t k = g.index(g.n1(), j);
    const Increment dq = increment_at(base_, w_star, u, q, s, k);
    const double pe = bd.pressure_ex[jj];
    if (!(pe > 0.0)) throw Error(ErrorCode::invalid_argument, "exit pressure must be positive");
    const double m1 = dq.q[0] + dq.s[1], m2 = dq.q[1] - dq.s[0];
    const double kinetic = 0.5 * (m1 * m1 + m2 * m2);
    const double enthalpy = std::pow(pe, (gm - 1.0) / gm) *
                            std::pow(sc.entropy_scale(prm.s0 + dq.varsigma), 1.0 / gm);
    out.g[jj] = -dq.s[1] + (dq.eta + psi_ex[jj] - kinetic) / ul -
                gm * (enthalpy - ref) / ((gm - 1.0) * ul);
  }
  return out;
}

InnerResult NozzleSolver::inner_solve(const BoundaryData& bd, const TransportIterate& w_star,
                                      const PotentialState& init) const {
  const Grid2D& g = base_.grid;
  const std::vector<double> psi_en = bd.psi_entrance(base_);
  const std::vector<double> psi_ex = bd.psi_exit(base_);
  const BackgroundParams& prm = base_.background.params;
  std::mt19937_64 rng(config_.seed);

  InnerResult res{init, {}};
  InnerReport& rep = res.report;
  for (int sweep = 1; sweep <= config_.max_inner; ++sweep) {
    const PotentialState& old = res.u;
    const RhsFields rhs_old = assemble_rhs(bd, w_star, old);
    ScalarField psi = poisson_.solve(rhs_old.f2, config_.linear_tol, config_.linear_max_iter);
    rep.poisson_residual = std::max(rep.poisson_residual, poisson_.residual(psi, rhs_old.f2));

    RhsFields rhs_new(rhs_old);
    PotentialState mid{old.potential, old.phi, psi};
    if (config_.psi_first) rhs_new = assemble_rhs(bd, w_star, mid);
    const LinearSystemSpec spec{rhs_new.flux, rhs_new.f1, rhs_new.g, psi_en, psi_ex};
    CoupledSolution sol = coupled_.solve(spec, config_.linear_tol, config_.linear_max_iter);
    rep.linear_residual = std::max(rep.linear_residual, sol.report.residual());

    if (config_.debug_checks) {
      const PotentialState& at = config_.psi_first ? mid : old;
      const VectorField q = gradient(at.phi), s = gradient(at.psi);
      std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
      for (int n = 0; n < 16; ++n) {
        const std::size_t k = pick(rng);
        const Increment dq = increment_at(base_, w_star, at, q, s, k);
        const double phi0 = base_.fields.elec_potential[k], u_bar = base_.fields.u[k];
        const PointRhs a = closed_form_rhs(base_.constants, prm.s0, base_.k0, phi0, u_bar, dq);
        const PointRhs b = quadrature_rhs(base_.constants, prm.s0, base_.k0, phi0, u_bar, dq, 64);
        const double scale = std::max({std::abs(a.flux[0]), std::abs(a.flux[1]),
                                       std::abs(a.f1_nonlinear), 1e-300});
        const double diff = std::max({std::abs(a.flux[0] - b.flux[0]), std::abs(a.flux[1] - b.flux[1]),
                                      std::abs(a.f1_nonlinear - b.f1_nonlinear)});
        if (scale > 1e-300) rep.quadrature_defect = std::max(rep.quadrature_defect, diff / scale);
      }
    }

    PotentialState next{std::move(sol.potential), std::move(sol.phi), std::move(psi)};
    const double change = std::max({max_c1_change(next.potential, old.potential),
                                    max_c1_change(next.phi, old.phi),
                                    max_c1_change(next.psi, old.psi)});
    if (!rep.changes.empty() && rep.changes.back() > 0.0)
      rep.ratios.push_back(change / rep.changes.back());
    rep.changes.push_back(change);
    rep.sweeps = sweep;
    res.u = std::move(next);
    if (!std::isfinite(change)) break;
    if (change <= config_.inner_tol) {
      rep.converged = true;
      return res;
    }
    // Below the stagnation threshold a change that stops contracting is
    // linear-solver round-off, which grows like 1/h^3 in the C1 norm.
    const std::size_t nr = rep.ratios.size();
    if (change <= config_.stagnation_factor * config_.inner_tol && nr >= 3 &&
        rep.ratios[nr - 1] > 0.5 && rep.ratios[nr - 2] > 0.5 && rep.ratios[nr - 3] > 0.5) {
      rep.converged = true;
      rep.roundoff_limited = true;
      return res;
    }
  }
  std::string history;
  for (double r : rep.ratios) history += " " + format_value(r);
  throw Error(ErrorCode::not_converged,
              "inner iteration did not reach tolerance in " + std::to_string(config_.max_inner) +
                  " sweeps; last change " +
                  format_value(rep.changes.empty() ? 0.0 : rep.changes.back()) +
                  ", contraction ratios:" + history);
}

VectorField NozzleSolver::mass_flux(const TransportIterate& w_star, const PotentialState& u) const {
  const Grid2D& g = base_.grid;
  const BackgroundParams& prm = base_.background.params;
  const VectorField q = gradient(u.phi);
  const VectorField s = gradient(u.psi);
  VectorField v(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Increment dq = increment_at(base_, w_star, u, q, s, k);
    const double u_bar = base_.fields.u[k];
    const FluxArgs args = shifted_args(prm.s0, base_.k0, base_.fields.elec_potential[k], u_bar, dq);
    const double rho = eval_H(base_.constants, args.entropy, args.head());
    v.c1[k] = rho * (u_bar + dq.q[0] + dq.s[1]);
    v.c2[k] = rho * (dq.q[1] - dq.s[0]);
  }
  return v;
}

SolveResult NozzleSolver::outer_iterate(const BoundaryData& bd,
                                        const std::optional<TransportIterate>& init) const {
  const Grid2D& g = base_.grid;
  const double s0 = base_.background.params.s0;
  TransportIterate w = init ? *init : TransportIterate::background(base_);
  PotentialState u = PotentialState::zero(g);

  OuterReport rep;
  rep.sigma = bd.sigma;
  rep.coercivity = coercivity_;
  rep.inlet_smooth = bd.inlet_smooth;
  double theta = config_.damping;
  double prev_change = std::numeric_limits<double>::infinity();

  for (int sweep = 1; sweep <= config_.max_outer; ++sweep) {
    InnerResult inner = inner_solve(bd, w, u);
    u = std::move(inner.u);
    VectorField v = mass_flux(w, u);
    StreamFunction sf = compute_stream(v);
    FlowMap fm = flow_map(sf);
    const TransportState wt = transport_W(bd.entropy_en, bd.pseudo_en, fm);
    const FlowMapGradient grad = flow_map_gradient(fm, v, bd.entropy_en, bd.pseudo_en);

    auto blend = [theta](const ScalarField& old_f, const ScalarField& new_f) {
      return theta >= 1.0 ? new_f : (1.0 - theta) * old_f + theta * new_f;
    };
    TransportIterate next{TransportState{blend(w.w.entropy, wt.entropy),
                                         blend(w.w.pseudo_bernoulli, wt.pseudo_bernoulli)},
                          blend(w.d2_entropy, grad.d2_entropy), blend(w.d2_pseudo, grad.d2_pseudo)};

    OuterSweep rec;
    rec.sweep = sweep;
    rec.theta = theta;
    rec.change = std::max(max_c1_change(next.w.entropy, w.w.entropy),
                          max_c1_change(next.w.pseudo_bernoulli, w.w.pseudo_bernoulli));
    ScalarField ds = next.w.entropy, dk = next.w.pseudo_bernoulli;
    for (std::size_t k = 0; k < g.size(); ++k) {
      ds[k] -= s0;
      dk[k] -= base_.k0;
    }
    rec.deviation = std::max(c1_norm(ds), c1_norm(dk));
    rec.inner_sweeps = inner.report.sweeps;
    rec.inner_change = inner.report.changes.empty() ? 0.0 : inner.report.changes.back();
    rec.inner_roundoff_limited = inner.report.roundoff_limited;
    for (double r : inner.report.ratios) rec.inner_ratio = std::max(rec.inner_ratio, r);
    rec.linear_residual = inner.report.linear_residual;
    rec.poisson_residual = inner.report.poisson_residual;
    rec.nu_star = sf.nu_star;
    rec.clamp_count = fm.clamp_count;
    rep.history.push_back(rec);
    rep.sweeps = sweep;
    rep.max_inner_ratio = std::max(rep.max_inner_ratio, rec.inner_ratio);
    rep.quadrature_defect = std::max(rep.quadrature_defect, inner.report.quadrature_defect);
    if (rec.deviation > config_.growth_multiple * bd.sigma + 1e-12 * (1.0 + std::abs(base_.k0)))
      rep.growth_guard_tripped = true;

    if (sweep > 1 && rec.change > prev_change) theta = std::max(0.5 * theta, 1.0 / 64.0);
    prev_change = rec.change;
    w = std::move(next);

    if (rec.change <= config_.outer_tol) {
      rep.converged = true;
      rep.level_set_defect = fm.inversion_residual;
      rep.inversion_residual = fm.inversion_residual;
      PrimitiveState prim = reconstruct_primitives(base_, u, w.w);
      return SolveResult{std::move(u), std::move(w), std::move(prim), std::move(v),
                         std::move(sf), std::move(fm), std::move(rep)};
    }
  }
  throw SolverNotConverged("outer iteration did not reach tolerance " +
                               format_value(config_.outer_tol) + " in " +
                               std::to_string(config_.max_outer) + " sweeps",
                           rep);
}

// ---------------------------------------------------------------------------

PrimitiveState reconstruct_primitives(const BaseState& base, const PotentialState& pot,
                                      const TransportState& w) {
  const Grid2D& g = base.grid;
  const StateConstants& sc = base.constants;
  const VectorField q = gradient(pot.phi);
  const VectorField s = gradient(pot.psi);
  PrimitiveState ps{ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g),
                    ScalarField(g), w.entropy,      w.pseudo_bernoulli, ScalarField(g)};
  ps.min_axial_velocity = std::numeric_limits<double>::infinity();
  ps.subsonic_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double u = base.fields.u[k] + q.c1[k] + s.c2[k];
    const double v = q.c2[k] - s.c1[k];
    const double speed_sq = u * u + v * v;
    const double phi = base.fields.elec_potential[k] + pot.potential[k];
    const double entropy = w.entropy[k];
    const double rho = eval_H(sc, entropy, w.pseudo_bernoulli[k] + phi - 0.5 * speed_sq);
    const double c2 = eval_sound_speed_sq(sc, rho, entropy);
    ps.rho[k] = rho;
    ps.u[k] = u;
    ps.v[k] = v;
    ps.p[k] = eval_pressure(sc, rho, entropy);
    ps.potential[k] = phi;
    ps.bernoulli[k] = 0.5 * speed_sq + c2 / (sc.gamma - 1.0);
    ps.min_axial_velocity = std::min(ps.min_axial_velocity, u);
    ps.subsonic_margin = std::min(ps.subsonic_margin, c2 - speed_sq);
  }
  ps.axial_velocity_positive = ps.min_axial_velocity > 0.0;
  if (!(ps.subsonic_margin > 0.0))
    throw Error(ErrorCode::subsonicity_lost,
                "reconstructed flow is sonic or supersonic (margin " +
                    format_value(ps.subsonic_margin) + ")");
  return ps;
}

ResidualFields residual_fields(const BaseState& base, const PrimitiveState& ps,
                               const BoundaryData& bd) {
  const Grid2D& g = base.grid;
  const StateConstants& sc = base.constants;
  const std::size_t n = g.size();
  ScalarField mu(g), mv(g), flux_uu(g), flux_uv(g), flux_vv(g), temp(g);
  for (std::size_t k = 0; k < n; ++k) {
    mu[k] = ps.rho[k] * ps.u[k];
    mv[k] = ps.rho[k] * ps.v[k];
    flux_uu[k] = mu[k] * ps.u[k] + ps.p[k];
    flux_uv[k] = mu[k] * ps.v[k];
    flux_vv[k] = mv[k] * ps.v[k] + ps.p[k];
    temp[k] = eval_T(sc, ps.rho[k], ps.entropy[k]);
  }
  const VectorField grad_phi = gradient(ps.potential);
  const VectorField grad_b = gradient(ps.bernoulli);
  const ScalarField dmu = d1(mu), dmv = d2(mv);
  const ScalarField d1uu = d1(flux_uu), d2uv = d2(flux_uv), d1uv = d1(flux_uv), d2vv = d2(flux_vv);
  const ScalarField lap = laplacian(ps.potential);
  const ScalarField d1v = d1(ps.v), d2u = d2(ps.u), d2s = d2(ps.entropy), d2k = d2(ps.pseudo);

  ResidualFields r{ScalarField(g), ScalarField(g), ScalarField(g),
                   ScalarField(g), ScalarField(g), ScalarField(g)};
  for (std::size_t k = 0; k < n; ++k) {
    r.mass[k] = dmu[k] + dmv[k];
    r.momentum1[k] = d1uu[k] + d2uv[k] - ps.rho[k] * grad_phi.c1[k];
    r.momentum2[k] = d1uv[k] + d2vv[k] - ps.rho[k] * grad_phi.c2[k];
    r.bernoulli_transport[k] = mu[k] * (grad_b.c1[k] - grad_phi.c1[k]) +
                               mv[k] * (grad_b.c2[k] - grad_phi.c2[k]);
    r.poisson[k] = lap[k] - (ps.rho[k] - bd.charge[k]);
    r.vorticity[k] = ps.u[k] * (d1v[k] - d2u[k]) - (temp[k] * d2s[k] - d2k[k]);
  }
  return r;
}

double interior_sup_norm(const ScalarField& f) {
  const Grid2D& g = f.grid();
  const double lo = kInteriorBand - 1e-12, hi = 1.0 - kInteriorBand + 1e-12;
  double out = 0.0;
  for (int j = 0; j < g.ny(); ++j) {
    if (g.x2(j) < lo || g.x2(j) > hi) continue;
    for (int i = 0; i < g.nx(); ++i) {
      const double t = g.x1(i) / g.length();
      if (t >= lo && t <= hi) out = std::max(out, std::abs(f(i, j)));
    }
  }
  return out;
}

VerifyReport verify_solution(const BaseState& base, const PrimitiveState& ps, const BoundaryData& bd) {
  const Grid2D& g = base.grid;
  const ResidualFields r = residual_fields(base, ps, bd);
  auto norm = [](const ScalarField& f) { return ResidualNorm{sup_norm_no_corners(f), l2_norm(f), interior_sup_norm(f)}; };
  VerifyReport rep;
  rep.mass = norm(r.mass);
  rep.momentum1 = norm(r.momentum1);
  rep.momentum2 = norm(r.momentum2);
  rep.bernoulli_transport = norm(r.bernoulli_transport);
  rep.poisson = norm(r.poisson);
  rep.vorticity = norm(r.vorticity);

  for (int j = 0; j < g.ny(); ++j)
    rep.exit_pressure = std::max(rep.exit_pressure, std::abs(ps.p(g.n1(), j) -
                                                             bd.pressure_ex[static_cast<std::size_t>(j)]));
  ScalarField mu(g);
  for (std::size_t k = 0; k < g.size(); ++k) mu[k] = ps.rho[k] * ps.u[k];
  const double inflow = integrate_cross_section(mu, 0.0);
  for (int i = 0; i < g.nx(); ++i)
    rep.mass_flux_drift = std::max(rep.mass_flux_drift,
                                   std::abs(integrate_cross_section(mu, g.x1(i)) - inflow));
  rep.mass_flux_drift /= std::abs(inflow);

  rep.subsonic_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double c2 = eval_sound_speed_sq(base.constants, ps.rho[k], ps.entropy[k]);
    rep.subsonic_margin = std::min(rep.subsonic_margin, c2 - ps.u[k] * ps.u[k] - ps.v[k] * ps.v[k]);
    rep.pseudo_identity = std::max(rep.pseudo_identity,
                                   std::abs(ps.bernoulli[k] - ps.potential[k] - ps.pseudo[k]));
  }
  rep.gauge = ps.potential(0, 0);
  return rep;
}

Decomposition decompose_velocity(const VectorField& uv, const PoissonOperator& poisson) {
  const ScalarField curl = d2(uv.c1) - d1(uv.c2);
  ScalarField psi = poisson.solve(curl);
  const VectorField rot = perp_gradient(psi);
  ScalarField phi = least_squares_potential(VectorField(uv.c1 - rot.c1, uv.c2 - rot.c2));
  return {std::move(phi), std::move(psi)};
}

Decomposition decompose_velocity(const VectorField& uv) {
  return decompose_velocity(uv, PoissonOperator(uv.grid()));
}

double primitive_deviation(const PrimitiveState& ps, const BackgroundFields& ref) {
  return std::max({sup_norm_no_corners(ps.rho - ref.rho), sup_norm_no_corners(ps.u - ref.u),
                   sup_norm_no_corners(ps.v), sup_norm_no_corners(ps.p - ref.p),
                   sup_norm_no_corners(ps.potential - ref.elec_potential)});
}

}  // namespace epn
