#ifndef CONCENTRA_SRC_ENERGY_CONTEXT_HPP
#define CONCENTRA_SRC_ENERGY_CONTEXT_HPP

#include <array>
#include <vector>

#include "concentra/energy.hpp"

namespace concentra::detail {

/// Precomputed coefficient samples and strong-form operators of f_eps on one
/// grid.  All sums use the uniform lattice weight h^n so that value,
/// gradient and Hessian are exactly consistent as discrete objects.
struct EnergyContext {
  CartesianGrid grid;
  FieldKind kind = FieldKind::real;
  double p = 3.0;
  double hn = 1.0;                       // h^dim
  std::vector<double> Vc;                // V(eps x_j)  (or frozen value)
  std::vector<double> Kc;                // K(eps x_j)
  std::array<std::vector<double>, 3> Ac; // A(eps x_j), empty when no magnetic term
  bool magnetic = false;

  static EnergyContext assemble(const ProblemSpec& spec, const CartesianGrid& grid,
                                FieldKind kind, const EvalOptions& opts);

  double value(const GridFunction& u) const;
  void split(const GridFunction& u, double& kin, double& pot, double& nl) const;

  /// Strong residual s with Df(u)[v] = h^n sum_j Re(s_j conj(v_j)).
  GridFunction strong_gradient(const GridFunction& u) const;
  /// Strong Hessian application t with D^2 f(u)[v, w] = h^n sum Re(t conj(w)).
  GridFunction hessian_strong(const GridFunction& u, const GridFunction& v) const;

  /// Riesz map: solves (-lap + 1) g = s componentwise (tridiagonal solve in
  /// 1D, conjugate gradient otherwise).
  GridFunction riesz(const GridFunction& s, double rtol = 1e-12) const;

  /// ||Riesz(strong_gradient)||_H1, using <g,g>_M = h^n sum Re(s conj g).
  double grad_norm(const GridFunction& u) const;

  /// Quadratic part Q(u) of the functional (2 * (kinetic + potential)).
  double quadratic_form(const GridFunction& u) const;

private:
  // covariant derivative samples s_i(u) = -i D_i u - A_i u per axis
  void covariant(const GridFunction& u, int axis, std::vector<double>& out_re,
                 std::vector<double>& out_im) const;
  void add_kinetic_gradient(const GridFunction& u, GridFunction& acc) const;
};

/// Applies the transpose of the central-difference matrix used by
/// derivative() along `axis` (interior rows are minus the central
/// difference; boundary rows follow the one-sided stencils).
void derivative_transpose(const CartesianGrid& g, const std::vector<double>& y, int axis,
                          std::vector<double>& out);

} // namespace concentra::detail

#endif
