#include "epnozzle/transport.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "epnozzle/error.hpp"

namespace epn {

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n)
    throw Error(ErrorCode::invalid_argument, "monotone cubic needs at least two matching samples");
  for (std::size_t k = 1; k < n; ++k)
    if (!(x_[k] > x_[k - 1]))
      throw Error(ErrorCode::invalid_argument, "monotone cubic abscissae must increase");

  std::vector<double> delta(n - 1);
  increasing_ = true;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    delta[k] = (y_[k + 1] - y_[k]) / (x_[k + 1] - x_[k]);
    if (!(delta[k] > 0.0)) increasing_ = false;
  }
  m_.assign(n, 0.0);
  if (n == 2) {
    m_[0] = m_[1] = delta[0];
    return;
  }
  // Interior slopes: weighted harmonic mean, zero at extrema.
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) continue;
    const double h0 = x_[k] - x_[k - 1], h1 = x_[k + 1] - x_[k];
    const double w1 = 2.0 * h1 + h0, w2 = h1 + 2.0 * h0;
    m_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  // One-sided three-point end slopes, limited to keep monotonicity.
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(m) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return m;
  };
  m_[0] = end_slope(x_[1] - x_[0], x_[2] - x_[1], delta[0], delta[1]);
  m_[n - 1] = end_slope(x_[n - 1] - x_[n - 2], x_[n - 2] - x_[n - 3], delta[n - 2], delta[n - 3]);
}

std::size_t MonotoneCubic::segment(double t) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x_.begin() - 1, 0));
  return std::min(k, x_.size() - 2);
}

double MonotoneCubic::value(double t) const {
  const std::size_t k = segment(t);
  const double h = x_[k + 1] - x_[k];
  const double s = (t - x_[k]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y_[k] + (s3 - 2 * s2 + s) * h * m_[k] +
         (-2 * s3 + 3 * s2) * y_[k + 1] + (s3 - s2) * h * m_[k + 1];
}

double MonotoneCubic::derivative(double t) const {
  const std::size_t k = segment(t);
  const double h = x_[k + 1] - x_[k];
  const double s = (t - x_[k]) / h;
  const double s2 = s * s;
  return (6 * s2 - 6 * s) / h * y_[k] + (3 * s2 - 4 * s + 1) * m_[k] +
         (-6 * s2 + 6 * s) / h * y_[k + 1] + (3 * s2 - 2 * s) * m_[k + 1];
}

double MonotoneCubic::inverse(double y) const {
  if (!increasing_)
    throw Error(ErrorCode::flux_not_positive, "inlet table is not strictly increasing");
  if (y <= y_.front()) return x_.front();
  if (y >= y_.back()) return x_.back();
  const auto it = std::upper_bound(y_.begin(), y_.end(), y);
  const auto k = static_cast<std::size_t>(it - y_.begin() - 1);
  if (y == y_[k]) return x_[k];
  double lo = x_[k], hi = x_[k + 1];
  double t = lo + (hi - lo) * (y - y_[k]) / (y_[k + 1] - y_[k]);
  const double tol = 1e-15 * std::max({std::abs(y_.front()), std::abs(y_.back()), 1e-300});
  for (int it_count = 0; it_count < 100; ++it_count) {
    const double f = value(t) - y;
    if (std::abs(f) <= tol) break;
    if (f > 0.0) hi = t; else lo = t;
    const double df = derivative(t);
    double next = df > 0.0 ? t - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == t) break;
    t = next;
  }
  return t;
}

// ---------------------------------------------------------------------------

InletProfile InletProfile::closed_form(Fn value, Fn derivative) {
  InletProfile p;
  p.value_ = std::move(value);
  p.derivative_ = std::move(derivative);
  return p;
}

InletProfile InletProfile::constant(double c) {
  return closed_form([c](double) { return c; }, [](double) { return 0.0; });
}

InletProfile InletProfile::tabulated(std::vector<double> x2, std::vector<double> values) {
  double max_d1 = 0.0, max_d2 = 0.0;
  for (std::size_t k = 1; k < values.size(); ++k)
    max_d1 = std::max(max_d1, std::abs(values[k] - values[k - 1]));
  for (std::size_t k = 2; k < values.size(); ++k)
    max_d2 = std::max(max_d2, std::abs(values[k] - 2.0 * values[k - 1] + values[k - 2]));
  auto spline = std::make_shared<MonotoneCubic>(std::move(x2), std::move(values));
  InletProfile p;
  p.value_ = [spline](double t) { return spline->value(t); };
  p.derivative_ = [spline](double t) { return spline->derivative(t); };
  p.smooth_ = !(max_d1 > 0.0 && max_d2 > 0.5 * max_d1);
  return p;
}

double InletProfile::value(double t) const { return value_(t); }
double InletProfile::derivative(double t) const { return derivative_(t); }

// ---------------------------------------------------------------------------

StreamFunction compute_stream(const VectorField& V) {
  const Grid2D& g = V.grid();
  StreamFunction sf{ScalarField(g), 0.0, {}, 0.0, 0.0};
  double nu = V.c1[0];
  for (std::size_t k = 0; k < g.size(); ++k) nu = std::min(nu, V.c1[k]);
  sf.nu_star = nu;
  if (!(nu > 0.0))
    throw Error(ErrorCode::flux_not_positive,
                "axial mass flux V1 reaches " + format_value(nu) + " (recirculation)");

  const double h2 = g.h2();
  for (int i = 0; i < g.nx(); ++i) {
    double acc = 0.0;
    sf.w(i, 0) = 0.0;
    for (int j = 1; j < g.ny(); ++j) {
      acc += 0.5 * h2 * (V.c1(i, j - 1) + V.c1(i, j));
      sf.w(i, j) = acc;
    }
  }
  sf.scale = sup_norm(sf.w);

  const ScalarField dw = d1(sf.w);
  double defect = 0.0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      if (!g.in_corner_collar(i, j)) defect = std::max(defect, std::abs(dw(i, j) + V.c2(i, j)));
  sf.divergence_defect = defect;
  const double h = std::max(g.h1(), g.h2());
  const double v_scale = std::max(sup_norm(V.c1), sup_norm(V.c2));
  if (defect > 100.0 * h * h * v_scale)
    throw Error(ErrorCode::not_divergence_free,
                "d1 w + V2 = " + format_value(defect) + " exceeds the O(h^2) tolerance " +
                    format_value(100.0 * h * h * v_scale));

  std::vector<double> x2(static_cast<std::size_t>(g.ny())), table(x2.size());
  for (int j = 0; j < g.ny(); ++j) {
    x2[static_cast<std::size_t>(j)] = g.x2(j);
    table[static_cast<std::size_t>(j)] = sf.w(0, j);
  }
  sf.inlet = MonotoneCubic(std::move(x2), std::move(table));
  return sf;
}

FlowMap flow_map(const StreamFunction& sf) {
  const Grid2D& g = sf.w.grid();
  FlowMap fm{ScalarField(g), std::vector<char>(g.size(), 0), 0, 0.0, 0.0};
  const double lo = sf.inlet.y_front(), hi = sf.inlet.y_back();
  const double h = std::max(g.h1(), g.h2());
  const double allowed = 2.0 * h * h * sf.scale;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double w = sf.w[k];
    const double c = std::clamp(w, lo, hi);
    const double over = std::abs(w - c);
    if (over > allowed)
      throw Error(ErrorCode::out_of_range,
                  "stream function value " + format_value(w) + " leaves the inlet range [" +
                      format_value(lo) + ", " + format_value(hi) + "]");
    if (over > 0.0) {
      fm.clamped[k] = 1;
      ++fm.clamp_count;
      fm.max_overshoot = std::max(fm.max_overshoot, over);
    }
    const double t = sf.inlet.inverse(c);
    fm.lmap[k] = t;
    if (!fm.clamped[k] && sf.scale > 0.0)
      fm.inversion_residual =
          std::max(fm.inversion_residual, std::abs(sf.inlet.value(t) - w) / sf.scale);
  }
  // The inlet column is the identity by construction.
  for (int j = 0; j < g.ny(); ++j) fm.lmap(0, j) = g.x2(j);
  return fm;
}

TransportState transport_W(const InletProfile& s_en, const InletProfile& k_en, const FlowMap& fm) {
  const Grid2D& g = fm.lmap.grid();
  TransportState ts{ScalarField(g), ScalarField(g)};
  for (std::size_t k = 0; k < g.size(); ++k) {
    ts.entropy[k] = s_en.value(fm.lmap[k]);
    ts.pseudo_bernoulli[k] = k_en.value(fm.lmap[k]);
  }
  return ts;
}

FlowMapGradient flow_map_gradient(const FlowMap& fm, const VectorField& V,
                                  const InletProfile& s_en, const InletProfile& k_en) {
  const Grid2D& g = fm.lmap.grid();
  std::vector<double> x2(static_cast<std::size_t>(g.ny())), v1(x2.size());
  for (int j = 0; j < g.ny(); ++j) {
    x2[static_cast<std::size_t>(j)] = g.x2(j);
    v1[static_cast<std::size_t>(j)] = V.c1(0, j);
    if (!(V.c1(0, j) > 0.0))
      throw Error(ErrorCode::flux_not_positive, "inlet axial flux is not positive");
  }
  const MonotoneCubic inlet_v1(std::move(x2), std::move(v1));
  FlowMapGradient out{VectorField(g), ScalarField(g), ScalarField(g)};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double t = fm.lmap[k];
    const double denom = inlet_v1.value(t);
    if (!(denom > 0.0))
      throw Error(ErrorCode::flux_not_positive, "interpolated inlet axial flux is not positive");
    out.grad.c1[k] = -V.c2[k] / denom;
    out.grad.c2[k] = V.c1[k] / denom;
    out.d2_entropy[k] = s_en.derivative(t) * out.grad.c2[k];
    out.d2_pseudo[k] = k_en.derivative(t) * out.grad.c2[k];
  }
  return out;
}

}  // namespace epn
