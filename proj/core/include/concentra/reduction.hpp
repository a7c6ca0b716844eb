#ifndef CONCENTRA_REDUCTION_HPP
#define CONCENTRA_REDUCTION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "concentra/ansatz.hpp"
#include "concentra/energy.hpp"

namespace concentra {

/// H1-orthonormal basis of the tangent space of the critical manifold at an
/// ansatz z: the translation derivatives -d z/dx_i, plus i*z for complex
/// fields.
struct TangentBasis {
  enum class Kind { translation, translation_phase };
  Kind kind = Kind::translation;
  std::vector<GridFunction> vectors;
};

TangentBasis tangent_basis(const GridFunction& z, TangentBasis::Kind kind);

/// One candidate concentration point with the diagnostics of its correction
/// solve.
struct ReducedPoint {
  double eps = 0.0;
  Point xi{0.0, 0.0, 0.0};
  double sigma = 0.0;
  double w_norm = 0.0;                      // ||w||_H1
  double phi = 0.0;                         // Phi_eps(xi) = f_eps(z_xi + w)
  std::array<double, 3> reduced_grad{};     // grad Phi_eps(xi)
  double grad_norm = 0.0;                   // projected residual at convergence
  std::optional<int> morse_index;
  double coercivity = 0.0;                  // smallest |eig| of L on (T_zZ + span z)^perp
};

struct CorrectionResult {
  GridFunction w;
  ReducedPoint diag;
  std::vector<double> multipliers;  // components of grad f_eps(z+w) along the tangent basis
};

struct ReductionOptions {
  double newton_rtol = 1e-11;      // projected-gradient tolerance, relative to the ansatz norm
  int max_newton = 50;
  double coercivity_floor = 1e-6;  // below this the reduction is rejected as ill-conditioned
  bool with_coercivity = true;     // fill diag.coercivity (extra factorization)
};

/// Lyapunov-Schmidt correction: the unique small w orthogonal to T_zZ with
/// grad f_eps(z + w) in T_zZ, computed by Newton iteration on the bordered
/// system [L, basis; basis^T, 0].
CorrectionResult solve_correction(const ProblemSpec& spec, const RadialProfile& profile,
                                  const CartesianGrid& grid, const Point& xi, double sigma = 0.0,
                                  const ReductionOptions& opts = {});

/// Phi_eps(xi) = f_eps(z_xi + w(eps, xi)).
double reduced_energy(const ProblemSpec& spec, const RadialProfile& profile,
                      const CartesianGrid& grid, const Point& xi, double sigma = 0.0,
                      const ReductionOptions& opts = {});

/// Auxiliary concentration function
///   Lambda(x) = (1+V(x))^theta / K(x)^(2/(p-1)),
///   theta = (p+1)/(p-1) - n/2,
/// whose critical points locate the concentration of semiclassical
/// solutions.  Derivatives by 4th-order central differences.
class AuxiliaryFunction {
public:
  explicit AuxiliaryFunction(const ProblemSpec& spec);
  double theta() const { return theta_; }
  double value(const Point& x) const;
  Point grad(const Point& x) const;
  std::array<std::array<double, 3>, 3> hess(const Point& x) const;
  const ProblemSpec& spec() const { return spec_; }

private:
  ProblemSpec spec_;
  double theta_ = 0.0;
  double fd_step_ = 1e-3;
};

/// C1 = C0 (1/2 - 1/(p+1)) with C0 = int U^(p+1): the constant in the
/// expansion Phi_eps(xi) = C1 Lambda(eps xi) + O(eps).
double reduced_expansion_constant(const RadialProfile& profile);

struct ConcentrationSearch {
  std::vector<ReducedPoint> points;
  bool flat_landscape = false;
  std::vector<std::string> warnings;
};

/// Multistart quasi-Newton search for the critical points of Phi_eps.
/// `box_lo`/`box_hi` bound the search in the slow variable x = eps*xi; the
/// lattice has `multistart` cells per axis, augmented by critical points of
/// Lambda.  Duplicates are merged at radius 1e-3/eps in xi.
ConcentrationSearch find_concentration_points(const ProblemSpec& spec,
                                              const RadialProfile& profile,
                                              const CartesianGrid& grid, const Point& box_lo,
                                              const Point& box_hi, int multistart,
                                              const ReductionOptions& opts = {});

/// Number of negative eigenvalues of the reduced Hessian (finite differences
/// of grad Phi_eps), cross-checked against the Lambda Hessian sign pattern.
int morse_index(const ProblemSpec& spec, const RadialProfile& profile, const CartesianGrid& grid,
                const ReducedPoint& point, const ReductionOptions& opts = {});

struct CoercivityReport {
  double coercivity = 0.0;       // smallest |eig| of P L P on (T_zZ + span z)^perp
  double rayleigh_z = 0.0;       // (L z | z)/||z||^2, negative for valid reductions
  double tangent_quotient = 0.0; // max |(L t_i | t_i)| over the tangent basis
};

CoercivityReport check_coercivity(const ProblemSpec& spec, const RadialProfile& profile,
                                  const CartesianGrid& grid, const Point& xi, double sigma = 0.0);

/// Chart for the abstract reduction engine: a sampled box, optionally
/// periodic per coordinate.
struct ChartSpec {
  std::vector<double> lo, hi;
  std::vector<std::uint8_t> periodic;
  std::vector<int> samples;
};

struct ChartCriticalPoint {
  std::vector<double> theta;
  double gamma = 0.0;
  bool is_max = false;
};

/// Strict local extrema of a Melnikov function on the sampled chart,
/// refined by damped local descent/ascent.  The shared engine behind the
/// geodesics module.
std::vector<ChartCriticalPoint> abstract_reduce(
    const std::function<double(const std::vector<double>&)>& gamma, const ChartSpec& chart);

} // namespace concentra

#endif
