#ifndef CONCENTRA_GRID_HPP
#define CONCENTRA_GRID_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "concentra/errors.hpp"

namespace concentra {

/// Spatial point. Unused trailing components are zero; grids support dim <= 3.
using Point = std::array<double, 3>;

Point make_point(double x, double y = 0.0, double z = 0.0);

/// Truncated uniform box [-R, R]^dim with an odd number of nodes per axis,
/// so the origin is always a node. Fields sampled on it implicitly vanish
/// outside the box (Dirichlet exterior).
struct CartesianGrid {
  int dim = 1;
  double radius = 1.0;
  int points_per_axis = 3;
  double spacing = 1.0;

  std::int64_t node_count() const;
  /// Coordinate of node index j along one axis: -R + j*h.
  double axis_coord(int j) const { return -radius + spacing * j; }
  Point coord(std::int64_t flat) const;
  std::int64_t stride(int axis) const;
  void decompose(std::int64_t flat, int* idx) const;
  bool same_layout(const CartesianGrid& other) const;
};

/// Global cap on the node count accepted by make_grid.
std::int64_t grid_node_cap();
void set_grid_node_cap(std::int64_t cap);

CartesianGrid make_grid(int dim, double radius, int points_per_axis);

enum class FieldKind { real, complex_ };

/// Sampled scalar field on a CartesianGrid. Complex fields are stored as
/// interleaved (re, im) pairs.
class GridFunction {
public:
  GridFunction() = default;
  GridFunction(const CartesianGrid& grid, FieldKind kind);

  const CartesianGrid& grid() const { return grid_; }
  FieldKind kind() const { return kind_; }
  bool is_complex() const { return kind_ == FieldKind::complex_; }
  std::int64_t size() const { return n_; }

  double& operator[](std::int64_t j) { return values_[j]; }
  double operator[](std::int64_t j) const { return values_[j]; }

  std::complex<double> cval(std::int64_t j) const {
    return is_complex() ? std::complex<double>(values_[2 * j], values_[2 * j + 1])
                        : std::complex<double>(values_[j], 0.0);
  }
  void set_cval(std::int64_t j, std::complex<double> z) {
    if (is_complex()) {
      values_[2 * j] = z.real();
      values_[2 * j + 1] = z.imag();
    } else {
      values_[j] = z.real();
    }
  }
  double abs_at(std::int64_t j) const { return std::abs(cval(j)); }

  std::vector<double>& raw() { return values_; }
  const std::vector<double>& raw() const { return values_; }

  bool all_finite() const;

  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  GridFunction& operator*=(double c);

  static GridFunction sample(const CartesianGrid& grid, const std::function<double(const Point&)>& f);
  static GridFunction sample_complex(const CartesianGrid& grid,
                                     const std::function<std::complex<double>(const Point&)>& f);

private:
  CartesianGrid grid_{};
  FieldKind kind_ = FieldKind::real;
  std::int64_t n_ = 0;
  std::vector<double> values_;
};

struct NormKind {
  enum Tag { L2, Lp, H1, Linf } tag = L2;
  double p = 2.0;

  static NormKind l2() { return {L2, 2.0}; }
  static NormKind lp(double p);
  static NormKind h1() { return {H1, 2.0}; }
  static NormKind linf() { return {Linf, 2.0}; }
};

/// Trapezoidal quadrature weight of node `flat` (tensor product, boundary
/// factors 1/2 per axis).
double quad_weight(const CartesianGrid& grid, std::int64_t flat);

/// Trapezoidal quadrature of a sampled field; complex result for complex
/// fields (real part returned by integrate, full value by integrate_complex).
double integrate(const GridFunction& f);
std::complex<double> integrate_complex(const GridFunction& f);

/// Weighted pointwise products frequently needed by the energy module.
double integrate_product(const GridFunction& f, const GridFunction& g);

double norm(const GridFunction& f, NormKind kind);

/// Central-difference derivative along `axis`, one-sided at the boundary.
GridFunction derivative(const GridFunction& f, int axis);

/// Standard (2*dim+1)-point second-order Laplacian with zero Dirichlet
/// exterior.
GridFunction laplacian_apply(const GridFunction& f);

/// Lattice H1 inner product  sum_j h^n [ (-lap f)_j g_j + f_j g_j ]
/// (integration-by-parts form; exactly symmetric, positive definite).
/// Complex fields pair through the real part of the Hermitian product.
double h1_inner(const GridFunction& f, const GridFunction& g);
double h1_norm(const GridFunction& f);

} // namespace concentra

#endif
