#ifndef CONCENTRA_ENERGY_HPP
#define CONCENTRA_ENERGY_HPP

#include "concentra/problem.hpp"

namespace concentra {

/// Value and decomposition of the discrete functional
///   f_eps(u) = kinetic + potential - nonlinear,
/// kinetic   = 1/2 int |grad u|^2        (covariant gradient when magnetic),
/// potential = 1/2 int (1+V(eps x)) u^2,
/// nonlinear = 1/(p+1) int K(eps x) |u|^(p+1).
/// grad_norm is the H1 norm of the Riesz representative of Df_eps(u).
struct EnergyReport {
  double value = 0.0;
  double grad_norm = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double nonlinear = 0.0;
};

/// Frozen mode evaluates V, K, A at the single point eps*xi, turning f_eps
/// into the comparison functional F^{eps xi} whose exact critical point is
/// the ansatz.
struct EvalOptions {
  bool frozen = false;
  Point xi{0.0, 0.0, 0.0};
};

EnergyReport energy(const GridFunction& u, const ProblemSpec& spec, const EvalOptions& opts = {});

/// Riesz representative of Df_eps(u) in the lattice H1 inner product,
/// obtained by a conjugate-gradient solve of (-lap + 1) g = strong residual.
GridFunction gradient(const GridFunction& u, const ProblemSpec& spec, const EvalOptions& opts = {});

/// Riesz representative of D^2 f_eps(u)[v, .]; symmetric as a bilinear form.
GridFunction hessian_apply(const GridFunction& u, const GridFunction& v, const ProblemSpec& spec,
                           const EvalOptions& opts = {});

/// t > 0 such that t*u lies on the Nehari manifold of f_eps:
/// t = (Q(u)/N(u))^(1/(p-1)) with Q the quadratic part and
/// N = int K(eps x)|u|^(p+1).
double nehari_scale(const GridFunction& u, const ProblemSpec& spec, const EvalOptions& opts = {});

/// |LHS - RHS| of the Pohozaev identity on the ball of radius `ball_radius`
/// for the nonlinearity p(u) = |u|^(p-1) u + lambda u, with the boundary
/// integral taken over the grid faces of the discrete ball (one-sided
/// normal differences).
double pohozaev_residual(const GridFunction& u, double ball_radius, double p, double lambda = 0.0);

} // namespace concentra

#endif
