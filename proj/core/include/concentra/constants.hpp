#ifndef CONCENTRA_CONSTANTS_HPP
#define CONCENTRA_CONSTANTS_HPP

#include <vector>

#include "concentra/grid.hpp"

namespace concentra {

/// Parameters of the weighted Hardy and Hardy-Sobolev inequalities on
/// R^N = R^k x R^(N-k), x = (x', z).
struct HardyParams {
  int N = 3;
  int k = 2;
  double p = 2.0;     // Hardy exponent
  double alpha = 0.0; // weight exponent
  double q = 2.0;     // Hardy-Sobolev exponent
  double s = 0.0;     // Hardy-Sobolev parameter

  double hardy_constant() const;        // (alpha+k)^p / p^p  (lower bound of the quotient)
  double critical_exponent() const;     // q*(s) = q (N - s)/(N - q)

  /// Hypotheses for the quotient: 2 <= k <= N, alpha + k > 0, p >= 1.
  /// Values p >= k are admitted (they satisfy the k-dimensional radial
  /// lemma even though the split theorem states p < k).
  void validate_quotient() const;
  /// Hypotheses of the attainment theorem: 1 <= k <= N, 1 < q < N,
  /// 0 <= s < q, s < k.  The pure-Hardy corner s = q is rejected.
  void validate_sobolev() const;
};

/// Q(u) = int |grad u|^p |x'|^(alpha+p) / int |u|^p |x'|^alpha, with the
/// singular weight cell-averaged along the radial direction.
double hardy_quotient(const GridFunction& u, const HardyParams& params);

/// Quotient of the separable test family v(x') w(z/m) built from a
/// near-optimal log-stretched radial v; decreases toward the Hardy constant
/// as m grows.  The z box must contain the spread factor (resource error
/// otherwise).
double hardy_constant_probe(const HardyParams& params, int m);

struct SobolevMinimization {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  GridFunction minimizer;
};

/// Projected-gradient minimization of int |grad u|^q under the constraint
/// int |u|^(q*(s)) / |x'|^s = 1 (renormalized each step).  Returns the best
/// value found; `converged == false` flags budget exhaustion.
SobolevMinimization hardy_sobolev_S(const HardyParams& params, const CartesianGrid& grid,
                                    int budget);

/// Sobolev quotient of the Aubin-Talenti bubbles (eps + |x|^2)^(-(n-2)/2),
/// smoothly cut off at the box boundary; one value per eps.
std::vector<double> aubin_talenti_quotient(int n, const std::vector<double>& eps_values,
                                           const CartesianGrid& grid);

/// S_lambda = inf over the cut-off family phi(x)/(eps+|x|)^((n-2)/2) plus
/// radial local descent, on the unit ball.  `radial_points` sets the 1D
/// resolution of the radial quadrature.
double brezis_nirenberg_S_lambda(double lambda, int n, int radial_points = 4097);

/// First Dirichlet eigenvalue of -lap on the unit ball, by inverse
/// iteration on the masked grid with boundary-fitted (Shortley-Weller)
/// stencils.
double lambda1_ball(int n, const CartesianGrid& grid);

/// Radial computation of lambda_1 of the unit n-ball (any n >= 1).
double lambda1_ball_radial(int n, int radial_points = 8193);

} // namespace concentra

#endif
