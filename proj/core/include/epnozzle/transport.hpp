#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "epnozzle/grid.hpp"

namespace epn {

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
/// C1, preserves monotonicity of the data.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  /// `x` strictly increasing, at least two points.
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double value(double t) const;
  double derivative(double t) const;
  /// Solves value(t) = y for strictly increasing data; y is clamped to the
  /// table range.
  double inverse(double y) const;

  bool strictly_increasing() const noexcept { return increasing_; }
  double x_front() const { return x_.front(); }
  double x_back() const { return x_.back(); }
  double y_front() const { return y_.front(); }
  double y_back() const { return y_.back(); }

 private:
  std::size_t segment(double t) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;
  bool increasing_ = false;
};

/// A profile on the inlet [0,1], either in closed form or tabulated on nodes.
class InletProfile {
 public:
  using Fn = std::function<double(double)>;

  /// Closed form with analytic derivative.
  static InletProfile closed_form(Fn value, Fn derivative);
  static InletProfile constant(double c);
  /// Tabulated on increasing abscissae; differentiated through a monotone
  /// cubic.
  static InletProfile tabulated(std::vector<double> x2, std::vector<double> values);

  double value(double t) const;
  double derivative(double t) const;

  /// False when tabulated data look only Hoelder continuous (a kink or cusp:
  /// second differences comparable to first differences).
  bool smooth() const noexcept { return smooth_; }

 private:
  Fn value_;
  Fn derivative_;
  bool smooth_ = true;
};

struct StreamFunction {
  ScalarField w;
  double nu_star = 0.0;    ///< min of V1
  MonotoneCubic inlet;     ///< G(theta) = w(0, theta)
  double scale = 0.0;      ///< sup |w|
  double divergence_defect = 0.0;  ///< sup |d1 w + V2| away from the corners
};

/// w(x1, x2) = int_0^x2 V1(x1, y) dy (trapezoid per column).
/// Throws FluxNotPositive if min V1 <= 0 and NotDivergenceFree if
/// d1 w + V2 exceeds 100 h^2 sup|V| away from the corners.
StreamFunction compute_stream(const VectorField& V);

struct FlowMap {
  ScalarField lmap;
  std::vector<char> clamped;     ///< per node: w was outside [G(0), G(1)]
  std::size_t clamp_count = 0;
  double max_overshoot = 0.0;    ///< largest |w - clamp(w)|
  double inversion_residual = 0.0;  ///< sup |G(L) - w| / |w| over unclamped nodes
};

/// L(x) = G^{-1}(w(x)). Overshoots up to 2 h^2 |w| are clamped and counted;
/// larger ones throw OutOfRange.
FlowMap flow_map(const StreamFunction& sf);

struct TransportState {
  ScalarField entropy;           ///< S
  ScalarField pseudo_bernoulli;  ///< K
};

/// W = W_en o L componentwise.
TransportState transport_W(const InletProfile& s_en, const InletProfile& k_en, const FlowMap& fm);

struct FlowMapGradient {
  VectorField grad;         ///< grad L = (-V2, V1) / V1(0, L)
  ScalarField d2_entropy;   ///< S_en'(L) d2 L
  ScalarField d2_pseudo;    ///< K_en'(L) d2 L
};

/// Throws FluxNotPositive if the inlet axial flux is not positive.
FlowMapGradient flow_map_gradient(const FlowMap& fm, const VectorField& V,
                                  const InletProfile& s_en, const InletProfile& k_en);

}  // namespace epn
