#ifndef CONCENTRA_HOMOCLINIC_HPP
#define CONCENTRA_HOMOCLINIC_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "concentra/errors.hpp"

namespace concentra {

using TimeField = std::function<double(double)>;

/// Hamiltonian
///   H(t,u,v,lambda) = 1/2 (v^2 + lambda u^2 + a(t) u^2)
///                     - |u|^(sigma+2) / ((sigma+2)(1+e^-t))
///                     + u^2 v^2 / (2 (e^t + 1)),
/// with a >= 0 decaying and not identically zero.
struct HamiltonianSpec {
  double sigma_exp = 2.0;
  TimeField a;
  double lambda = -1.0;

  void validate() const;
  // dH/du and dH/dv of the full Hamiltonian
  double Hu(double t, double u, double v) const;
  double Hv(double t, double u, double v) const;
};

struct Lambda0Result {
  double value = 0.0;               // smallest eigenvalue of -d^2/dt^2 - a(t)
  bool admissible = false;          // value < 0: bifurcation point inside (-inf, 0)
  std::vector<double> t;            // nodes
  std::vector<double> phi;          // positive normalized eigenfunction
};

/// lambda_0 = inf { int |phi'|^2 - a |phi|^2 : ||phi||_2 = 1 } on the
/// truncated interval [-T, T] with Dirichlet ends.  An inadmissible result
/// (value >= 0) reports "no bifurcation point in (-inf, 0)".
Lambda0Result lambda0(const TimeField& a, double T, int M);

enum class Hyperbolicity { hyperbolic, degenerate, elliptic };

/// Spectrum of J diag(lambda, 1): off the imaginary axis iff lambda < 0.
Hyperbolicity hyperbolicity_check(double lambda);

struct Trajectory {
  std::vector<double> t, u, v;
};

struct BranchPoint {
  double lambda = 0.0;
  Trajectory x;
  double residual = 0.0;   // max-norm trapezoidal collocation residual
  double arclength = 0.0;
  double amplitude = 0.0;  // max |u|
};

struct HomoclinicOptions {
  double residual_tol = 1e-9;
  int max_newton = 60;
  double amplitude_floor = 1e-3;   // below this a converged solution counts as trivial
  double norm_cap = 25.0;          // continuation unbounded-branch proxy
  double lambda_boundary = -1e-3;  // continuation stops when lambda exceeds this
};

/// Damped-Newton trapezoidal collocation for  J x' = grad H(t, x, lambda)
/// on [-T, T] with u(+-T) = 0; rejects the trivial attractor.
BranchPoint solve_homoclinic(const HamiltonianSpec& spec, const Trajectory& guess, double T,
                             int M, const HomoclinicOptions& opts = {});

/// Convenient first guess delta * (phi0, phi0') from the lambda0
/// eigenfunction.
Trajectory seed_from_eigenfunction(const Lambda0Result& l0, double delta);

struct ContinuationResult {
  std::vector<BranchPoint> points;
  std::string termination_cause;  // unbounded-proxy | boundary | budget | stall
};

/// Pseudo-arclength continuation in (lambda, x) with fixed step ds.
ContinuationResult continue_branch(const HamiltonianSpec& spec, const BranchPoint& from,
                                   int steps, double ds, const HomoclinicOptions& opts = {});

/// Parity (-1)^k across lambda0, with k the number of eigenvalues of the
/// symmetrized linearization within 1e-6*scale of lambda0, after verifying
/// the transversality pairing over the kernel.
int parity_at(const HamiltonianSpec& spec, double lambda0_value, double T, int M);

/// Multi-channel variant: the linearization is the direct sum of the
/// Sturm-Liouville operators of the given potentials (k adds up).
int parity_at_channels(const std::vector<TimeField>& potentials, double lambda0_value, double T,
                       int M);

/// Number of eigenvalues of -d^2/dt^2 - a(t) within `tol` of lambda.
int kernel_dimension(const TimeField& a, double lambda, double T, int M, double tol);

} // namespace concentra

#endif
