#ifndef CONCENTRA_GEODESICS_HPP
#define CONCENTRA_GEODESICS_HPP

#include <functional>
#include <string>
#include <vector>

#include "concentra/errors.hpp"

namespace concentra {

/// Great circle z_{p,q}(t) = p cos 2 pi t + q sin 2 pi t on S^N together
/// with the cylinder coordinate r: one point of the critical manifold of
/// the unperturbed energy on R x S^N.
struct LoopState {
  double r = 0.0;
  std::vector<double> p, q;  // unit vectors in R^(N+1), p.q = 0
  int quad_nodes = 128;

  int sphere_dim() const { return static_cast<int>(p.size()) - 1; }
  void validate() const;  // unit and orthogonality invariants to 1e-12
};

/// Perturbation h of the product metric, as a symmetric (N+2)x(N+2) matrix
/// in the ambient coordinates (r, xi) of R x R^(N+1), evaluated at a point
/// (s, xi) of the cylinder.  Row-major storage.
struct MetricPerturbation {
  int N = 2;
  std::function<void(double s, const std::vector<double>& xi, std::vector<double>& H)> h;

  void eval(double s, const std::vector<double>& xi, std::vector<double>& H) const;
};

/// Melnikov function  Gamma(r,p,q) = 1/2 int_0^1 h(r, z_{p,q}(t))[zdot, zdot] dt
/// by the periodic trapezoidal rule (spectrally accurate for smooth h).
double melnikov_gamma(const LoopState& loop, const MetricPerturbation& h);

struct GeodesicCandidate {
  double r = 0.0;
  std::vector<double> p, q;
  double gamma = 0.0;
  enum class Class { maximum, minimum, saddle, degenerate } classification = Class::degenerate;
  bool pq_degenerate = false;  // Gamma flat in the (p,q) directions (conformal type)
};

struct GeodesicSearchOptions {
  double r_max = 8.0;   // search range in the cylinder coordinate
  int quad_nodes = 128;
  int max_refine = 120;
};

/// Critical points of Gamma over R x {Stiefel pairs}, modulo the O(2)
/// reparameterization action (quotient fixed by maximizing p.e1).
/// `multistart` seeds per r cell; an empty list with no candidates is legal
/// for flat Gamma.
std::vector<GeodesicCandidate> find_geodesic_candidates(const MetricPerturbation& h, int N,
                                                        int multistart,
                                                        const GeodesicSearchOptions& opts = {});

struct RefinedLoop {
  std::vector<double> t;                  // quadrature nodes
  std::vector<double> r;                  // cylinder coordinate samples
  std::vector<std::vector<double>> x;     // unit sphere samples per node
  double energy = 0.0;                    // E_eps of the refined loop
  double grad_norm = 0.0;
  double r_center = 0.0;                  // mean of r(t)
};

/// Gradient descent on the perturbed energy over truncated Fourier loops,
/// with the sphere component renormalized pointwise each step.
RefinedLoop refine_closed_geodesic(const GeodesicCandidate& candidate,
                                   const MetricPerturbation& h, double eps, int fourier_modes,
                                   int quad_nodes = 128);

/// Conformal perturbation phi(s) * g0 as a MetricPerturbation.
MetricPerturbation conformal_perturbation(int N, std::function<double(double)> phi);

} // namespace concentra

#endif
