#include "epnozzle/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epnozzle/error.hpp"

namespace epn {

Grid2D::Grid2D(int n1, int n2, double length) : n1_(n1), n2_(n2), length_(length) {
  if (n1 < 8 || n2 < 8)
    throw Error(ErrorCode::invalid_argument,
                "grid needs at least 8 cells per direction, got " + std::to_string(n1) + "x" +
                    std::to_string(n2));
  if (!(length > 0.0) || !std::isfinite(length))
    throw Error(ErrorCode::invalid_argument, "nozzle length must be positive");
}

Region Grid2D::region(int i, int j) const noexcept {
  const bool en = i == 0, ex = i == n1_, wall = j == 0 || j == n2_;
  if (wall && (en || ex)) return Region::corner;
  if (en) return Region::entrance;
  if (ex) return Region::exit;
  if (wall) return Region::wall;
  return Region::interior;
}

bool Grid2D::in_corner_collar(int i, int j) const noexcept {
  const bool near_end = i <= 1 || i >= n1_ - 1;
  const bool near_wall = j <= 1 || j >= n2_ - 1;
  return near_end && near_wall;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(const Grid2D& grid, double value)
    : grid_(grid), values_(grid.size(), value) {}

ScalarField::ScalarField(const Grid2D& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw Error(ErrorCode::grid_mismatch, "value count does not match grid");
}

std::vector<double> ScalarField::column(int i) const {
  std::vector<double> out(static_cast<std::size_t>(grid_.ny()));
  for (int j = 0; j < grid_.ny(); ++j) out[static_cast<std::size_t>(j)] = (*this)(i, j);
  return out;
}

std::vector<double> ScalarField::row(int j) const {
  const auto first = values_.begin() + static_cast<std::ptrdiff_t>(grid_.index(0, j));
  return {first, first + grid_.nx()};
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  if (!(other.grid_ == grid_)) throw Error(ErrorCode::grid_mismatch, "field grids differ");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  if (!(other.grid_ == grid_)) throw Error(ErrorCode::grid_mismatch, "field grids differ");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

bool ScalarField::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

// ---------------------------------------------------------------------------

namespace {

// Second-order first derivative at position k of a line sampled with spacing h.
template <class At>
double line_derivative(At at, int k, int n, double h) {
  if (k == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (k == n) return (3.0 * at(n) - 4.0 * at(n - 1) + at(n - 2)) / (2.0 * h);
  return (at(k + 1) - at(k - 1)) / (2.0 * h);
}

template <class At>
double line_second_derivative(At at, int k, int n, double h) {
  const double h2 = h * h;
  if (k == 0) return (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2;
  if (k == n) return (2.0 * at(n) - 5.0 * at(n - 1) + 4.0 * at(n - 2) - at(n - 3)) / h2;
  return (at(k + 1) - 2.0 * at(k) + at(k - 1)) / h2;
}

}  // namespace

ScalarField d1(const ScalarField& f) {
  const Grid2D& g = f.grid();
  ScalarField out(g);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      out(i, j) = line_derivative([&](int k) { return f(k, j); }, i, g.n1(), g.h1());
  return out;
}

ScalarField d2(const ScalarField& f) {
  const Grid2D& g = f.grid();
  ScalarField out(g);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      out(i, j) = line_derivative([&](int k) { return f(i, k); }, j, g.n2(), g.h2());
  return out;
}

VectorField gradient(const ScalarField& f) { return {d1(f), d2(f)}; }

VectorField perp_gradient(const ScalarField& f) {
  ScalarField minus_d1 = d1(f);
  minus_d1 *= -1.0;
  return {d2(f), std::move(minus_d1)};
}

ScalarField divergence(const VectorField& F) { return d1(F.c1) + d2(F.c2); }

ScalarField laplacian(const ScalarField& f) {
  const Grid2D& g = f.grid();
  ScalarField out(g);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      out(i, j) = line_second_derivative([&](int k) { return f(k, j); }, i, g.n1(), g.h1()) +
                  line_second_derivative([&](int k) { return f(i, k); }, j, g.n2(), g.h2());
  return out;
}

double integrate_cross_section(const ScalarField& f, double x1) {
  const Grid2D& g = f.grid();
  const double s = std::clamp(x1 / g.h1(), 0.0, static_cast<double>(g.n1()));
  const int i0 = std::min(static_cast<int>(std::floor(s)), g.n1() - 1);
  const double t = s - i0;
  auto column_integral = [&](int i) {
    double acc = 0.0;
    for (int j = 0; j < g.n2(); ++j) acc += 0.5 * (f(i, j) + f(i, j + 1));
    return acc * g.h2();
  };
  return (1.0 - t) * column_integral(i0) + t * column_integral(i0 + 1);
}

double integrate_cross_section(const VectorField& F, double x1) {
  return integrate_cross_section(F.c1, x1);
}

InterpResult interp(const ScalarField& f, Vec2 point) {
  const Grid2D& g = f.grid();
  const double s1 = point[0] / g.h1();
  const double s2 = point[1] / g.h2();
  const bool outside = s1 < -0.5 || s1 > g.n1() + 0.5 || s2 < -0.5 || s2 > g.n2() + 0.5;
  const double c1 = std::clamp(s1, 0.0, static_cast<double>(g.n1()));
  const double c2 = std::clamp(s2, 0.0, static_cast<double>(g.n2()));
  const int i = std::min(static_cast<int>(std::floor(c1)), g.n1() - 1);
  const int j = std::min(static_cast<int>(std::floor(c2)), g.n2() - 1);
  const double t = c1 - i, u = c2 - j;
  const double v = (1 - t) * (1 - u) * f(i, j) + t * (1 - u) * f(i + 1, j) +
                   (1 - t) * u * f(i, j + 1) + t * u * f(i + 1, j + 1);
  return {v, outside};
}

double sup_norm(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double sup_norm_no_corners(const ScalarField& f) {
  const Grid2D& g = f.grid();
  double m = 0.0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      if (!g.in_corner_collar(i, j)) m = std::max(m, std::abs(f(i, j)));
  return m;
}

double sup_norm_interior(const ScalarField& f) {
  const Grid2D& g = f.grid();
  double m = 0.0;
  for (int j = 1; j < g.n2(); ++j)
    for (int i = 1; i < g.n1(); ++i) m = std::max(m, std::abs(f(i, j)));
  return m;
}

double c1_norm(const ScalarField& f) {
  return sup_norm_no_corners(f) + sup_norm_no_corners(d1(f)) + sup_norm_no_corners(d2(f));
}

double l2_norm(const ScalarField& f) {
  const Grid2D& g = f.grid();
  double acc = 0.0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) acc += g.weight1(i) * g.weight2(j) * f(i, j) * f(i, j);
  return std::sqrt(acc);
}

double h1_norm_sq(const ScalarField& f) {
  const Grid2D& g = f.grid();
  double acc = 0.0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      acc += g.weight1(i) * g.weight2(j) * f(i, j) * f(i, j);
      if (i < g.n1()) {
        const double d = (f(i + 1, j) - f(i, j)) / g.h1();
        acc += g.weight2(j) * g.h1() * d * d;
      }
      if (j < g.n2()) {
        const double d = (f(i, j + 1) - f(i, j)) / g.h2();
        acc += g.weight1(i) * g.h2() * d * d;
      }
    }
  return acc;
}

}  // namespace epn
