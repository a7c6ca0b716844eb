#ifndef CONCENTRA_ANSATZ_HPP
#define CONCENTRA_ANSATZ_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "concentra/problem.hpp"

namespace concentra {

/// Radial ground state U of  -lap U + U = U^p  as sampled node data plus a
/// fitted exponential decay rate.  Values are strictly positive and
/// decreasing; the interpolant is monotone cubic, so positivity and
/// monotonicity survive evaluation between nodes.
struct RadialProfile {
  std::vector<double> radii;   // increasing, starts at 0
  std::vector<double> values;  // positive, strictly decreasing
  double peak = 0.0;           // U(0)
  double decay_rate = 0.0;     // mu with U(r) ~ C exp(-mu r) for large r
  int n = 1;
  double p = 3.0;

  /// Monotone cubic interpolation of the samples; treats the profile as
  /// immutable after construction.
  double value_at(double r) const;

  /// Two-column (r, U) text serialization with header "# n p peak decay_rate".
  void save(std::ostream& os) const;
  void save_file(const std::string& path) const;
  static RadialProfile load(std::istream& is);
  static RadialProfile load_file(const std::string& path);

private:
  mutable std::vector<double> slopes_; // interpolation slopes, built lazily
};

struct ShootingOptions {
  double upper_bracket = 8.0;  // bisection upper end for U(0)
  int steps = 8192;            // stored nodes over [0, r_max]
  int substeps = 6;            // internal RK4 steps per node
  int bisection_depth = 60;
  double class_extra = 8.0;    // classification horizon beyond r_max
};

/// Ground state by shooting: bisection on U(0) between the constant
/// solution 1 and `upper_bracket`, RK4 in r with the r=0 singularity
/// handled by the regular series expansion.
RadialProfile solve_ground_state(int n, double p, double tol, double r_max,
                                 const ShootingOptions& opts = {});

/// Concentration-ansatz parameters at a point xi.
struct AnsatzParams {
  Point xi{0.0, 0.0, 0.0};
  double sigma = 0.0;
  double alpha = 1.0;  // ((1+V(eps xi))/K(eps xi))^(1/(p-1))
  double beta = 1.0;   // (1+V(eps xi))^(1/2)
};

/// alpha, beta making  alpha U(beta (x-xi))  solve the frozen equation
///   -lap u + u + V(eps xi) u = K(eps xi) u^p.
std::pair<double, double> scaling_coefficients(const ProblemSpec& spec, const Point& xi);

/// Samples z_xi(x) = alpha U(beta (x-xi)) on the grid.  xi must sit at
/// least four decay lengths away from the box boundary.
GridFunction build_ansatz(const RadialProfile& profile, const ProblemSpec& spec, const Point& xi,
                          const CartesianGrid& grid);

/// Magnetic ansatz  exp(i sigma + i A(eps xi) . x) alpha U(beta (x-xi)).
GridFunction build_magnetic_ansatz(const RadialProfile& profile, const ProblemSpec& spec,
                                   const Point& xi, double sigma, const CartesianGrid& grid);

} // namespace concentra

#endif
