#ifndef CONCENTRA_LINALG_HPP
#define CONCENTRA_LINALG_HPP

#include <functional>
#include <vector>

namespace concentra {

/// Conjugate gradient for an SPD operator given as a callback
/// apply(x, out).  `x` holds the initial guess on entry and the solution on
/// return.  Returns the iteration count; throws SolverError when maxit is
/// exhausted before the relative residual drops below rtol.
int conjugate_gradient(
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply,
    const std::vector<double>& b, std::vector<double>& x, double rtol, int maxit);

/// Thomas algorithm; diag/lower/upper are overwritten.  Solves in place.
void solve_tridiagonal(std::vector<double>& lower, std::vector<double>& diag,
                       std::vector<double>& upper, std::vector<double>& rhs);

} // namespace concentra

#endif
