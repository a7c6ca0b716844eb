#include "concentra/linalg.hpp"

#include <cmath>
#include <string>

#include "concentra/errors.hpp"

namespace concentra {

int conjugate_gradient(
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply,
    const std::vector<double>& b, std::vector<double>& x, double rtol, int maxit) {
  const size_t n = b.size();
  std::vector<double> r(n), p(n), ap(n);
  apply(x, ap);
  double bnorm2 = 0.0, rr = 0.0;
  for (size_t i = 0; i < n; ++i) {
    r[i] = b[i] - ap[i];
    p[i] = r[i];
    bnorm2 += b[i] * b[i];
    rr += r[i] * r[i];
  }
  if (bnorm2 == 0.0) {
    x.assign(n, 0.0);
    return 0;
  }
  const double stop2 = rtol * rtol * bnorm2;
  for (int it = 1; it <= maxit; ++it) {
    if (rr <= stop2) return it - 1;
    apply(p, ap);
    double pap = 0.0;
    for (size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
    if (pap <= 0.0) throw SolverError("conjugate_gradient: operator not positive definite");
    const double alpha = rr / pap;
    double rr_new = 0.0;
    for (size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      rr_new += r[i] * r[i];
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  throw SolverError("conjugate_gradient: no convergence in " + std::to_string(maxit) +
                    " iterations (relative residual " + std::to_string(std::sqrt(rr / bnorm2)) +
                    ")");
}

void solve_tridiagonal(std::vector<double>& lower, std::vector<double>& diag,
                       std::vector<double>& upper, std::vector<double>& rhs) {
  const size_t n = diag.size();
  for (size_t i = 1; i < n; ++i) {
    const double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

} // namespace concentra
