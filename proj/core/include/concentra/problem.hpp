#ifndef CONCENTRA_PROBLEM_HPP
#define CONCENTRA_PROBLEM_HPP

#include <array>
#include <optional>

#include "concentra/expr.hpp"
#include "concentra/grid.hpp"

namespace concentra {

/// Coefficient data of the semiclassical equation
///   -lap u + u + V(eps x) u = K(eps x) |u|^(p-1) u        (real path)
/// and its magnetic variant with vector potential A.  V defaults to 0,
/// K to 1, A to 0.
struct ProblemSpec {
  int n = 1;
  double p = 3.0;
  double epsilon = 0.1;
  ScalarField V;                   // may be empty: V == 0
  ScalarField K;                   // may be empty: K == 1
  std::array<ScalarField, 3> A{};  // all empty: A == 0

  double V_at(const Point& x) const { return V ? V(x) : 0.0; }
  double K_at(const Point& x) const { return K ? K(x) : 1.0; }
  Point A_at(const Point& x) const {
    Point a{0.0, 0.0, 0.0};
    for (int c = 0; c < n; ++c)
      if (A[c]) a[c] = A[c](x);
    return a;
  }
  bool has_magnetic() const { return static_cast<bool>(A[0]) || static_cast<bool>(A[1]) || static_cast<bool>(A[2]); }

  /// Subcritical exponent bound (n+2)/(n-2) for n >= 3, else +inf.
  double p_max() const;

  /// Validates type invariants; samples 1+V and K over `grid` when given.
  /// Throws ValidationError naming the offending field.
  void validate(const CartesianGrid* grid = nullptr) const;
};

} // namespace concentra

#endif
