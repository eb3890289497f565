#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace epn {

using Vec2 = std::array<double, 2>;

/// Region tag of a grid node. Corners are the four nodes where the walls meet
/// the entrance or exit.
enum class Region : std::uint8_t { interior, entrance, exit, wall, corner };

/// Uniform node-centered tensor grid on (0,L)x(0,1).
///
/// Nodes are (i*h1, j*h2) for i in [0,n1], j in [0,n2]; storage is
/// x1-fastest, `index(i,j) = j*(n1+1) + i`.
class Grid2D {
 public:
  Grid2D(int n1, int n2, double length);

  int n1() const noexcept { return n1_; }
  int n2() const noexcept { return n2_; }
  int nx() const noexcept { return n1_ + 1; }
  int ny() const noexcept { return n2_ + 1; }
  double length() const noexcept { return length_; }
  double h1() const noexcept { return length_ / n1_; }
  double h2() const noexcept { return 1.0 / n2_; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(nx()) * static_cast<std::size_t>(ny());
  }

  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx()) +
           static_cast<std::size_t>(i);
  }
  double x1(int i) const noexcept { return i == n1_ ? length_ : i * h1(); }
  double x2(int j) const noexcept { return j == n2_ ? 1.0 : j * h2(); }

  Region region(int i, int j) const noexcept;

  /// Control-volume widths used by the finite-volume assembly: h on interior
  /// lines, h/2 on boundary lines.
  double weight1(int i) const noexcept { return (i == 0 || i == n1_) ? 0.5 * h1() : h1(); }
  double weight2(int j) const noexcept { return (j == 0 || j == n2_) ? 0.5 * h2() : h2(); }

  /// True when the node lies within one cell of a corner.
  bool in_corner_collar(int i, int j) const noexcept;

  bool operator==(const Grid2D& other) const noexcept = default;

 private:
  int n1_;
  int n2_;
  double length_;
};

class ScalarField {
 public:
  explicit ScalarField(const Grid2D& grid, double value = 0.0);
  ScalarField(const Grid2D& grid, std::vector<double> values);

  template <class Fn>
  static ScalarField from_function(const Grid2D& grid, Fn&& fn) {
    ScalarField f(grid);
    for (int j = 0; j < grid.ny(); ++j)
      for (int i = 0; i < grid.nx(); ++i) f(i, j) = fn(grid.x1(i), grid.x2(j));
    return f;
  }

  const Grid2D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(int i, int j) noexcept { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }
  double& operator[](std::size_t k) noexcept { return values_[k]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Column x1 = x1(i) as a copy, bottom to top.
  std::vector<double> column(int i) const;
  /// Row x2 = x2(j) as a copy, entrance to exit.
  std::vector<double> row(int j) const;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s);

  bool all_finite() const noexcept;

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

struct VectorField {
  ScalarField c1;
  ScalarField c2;

  explicit VectorField(const Grid2D& grid) : c1(grid), c2(grid) {}
  VectorField(ScalarField a, ScalarField b) : c1(std::move(a)), c2(std::move(b)) {}

  const Grid2D& grid() const noexcept { return c1.grid(); }
};

// ---------------------------------------------------------------------------
// Discrete calculus. Centered second-order differences in the interior and
// one-sided second-order differences on boundary lines.

ScalarField d1(const ScalarField& f);
ScalarField d2(const ScalarField& f);
VectorField gradient(const ScalarField& f);
/// (d2 f, -d1 f), built from the same stencils as `gradient`.
VectorField perp_gradient(const ScalarField& f);
ScalarField divergence(const VectorField& F);
/// 5-point Laplacian at interior nodes; boundary nodes use one-sided second
/// differences in the normal direction.
ScalarField laplacian(const ScalarField& f);

/// Trapezoid integral of F.c1 along the vertical line x1, linearly
/// interpolated between neighbouring columns.
double integrate_cross_section(const VectorField& F, double x1);
double integrate_cross_section(const ScalarField& f, double x1);

struct InterpResult {
  double value;
  bool out_of_domain;  ///< point was further than half a cell outside and got clamped
};

/// Bilinear interpolation, exact at nodes.
InterpResult interp(const ScalarField& f, Vec2 point);

// ---------------------------------------------------------------------------
// Discrete norms.

double sup_norm(const ScalarField& f);
/// Sup norm skipping nodes in the one-cell corner collar.
double sup_norm_no_corners(const ScalarField& f);
/// Sup norm over strictly interior nodes.
double sup_norm_interior(const ScalarField& f);
/// sup|f| + sup|d1 f| + sup|d2 f|, corners excluded.
double c1_norm(const ScalarField& f);
/// Discrete L2 norm with the finite-volume weights.
double l2_norm(const ScalarField& f);
/// Discrete H1 norm squared: L2(f)^2 + edge-difference gradient energy.
double h1_norm_sq(const ScalarField& f);

}  // namespace epn
