#include "concentra/constants.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "energy_context.hpp"

namespace concentra {

double HardyParams::hardy_constant() const { return std::pow((alpha + k) / p, p); }

double HardyParams::critical_exponent() const { return q * (N - s) / (N - q); }

void HardyParams::validate_quotient() const {
  if (k < 2 || k > N) throw ValidationError("hardy.k: need 2 <= k <= N");
  if (!(alpha + k > 0.0)) throw ValidationError("hardy.alpha: need alpha + k > 0");
  if (!(p >= 1.0)) throw ValidationError("hardy.p: need p >= 1");
}

void HardyParams::validate_sobolev() const {
  if (k < 1 || k > N) throw ValidationError("hardy.k: need 1 <= k <= N");
  if (!(q > 1.0 && q < double(N))) throw ValidationError("hardy.q: need 1 < q < N");
  if (!(s >= 0.0 && s < q))
    throw ValidationError("hardy.s: need 0 <= s < q (the pure-Hardy corner s = q is excluded)");
  if (!(s < double(k))) throw ValidationError("hardy.s: need s < k");
}

namespace {

// Average of t^alpha over the radial cell around s0 (1D-exact); the axis
// cell uses the k-dimensional ball average, which stays finite whenever
// alpha + k > 0.
double radial_weight(double s0, double h, double alpha, int k) {
  if (s0 < 0.25 * h) {
    return std::pow(0.5 * h, alpha) * double(k) / (alpha + k);
  }
  const double a = std::max(0.0, s0 - 0.5 * h), b = s0 + 0.5 * h;
  if (std::abs(alpha + 1.0) < 1e-12) return std::log(b / a) / (b - a);
  return (std::pow(b, alpha + 1.0) - std::pow(a, alpha + 1.0)) / ((alpha + 1.0) * (b - a));
}

double xprime_norm(const Point& x, int k) {
  double s2 = 0.0;
  for (int a = 0; a < k; ++a) s2 += x[a] * x[a];
  return std::sqrt(s2);
}

} // namespace

double hardy_quotient(const GridFunction& u, const HardyParams& params) {
  params.validate_quotient();
  const CartesianGrid& g = u.grid();
  if (g.dim != params.N)
    throw ValidationError("hardy_quotient: grid dimension must equal N");
  if (u.is_complex()) throw ValidationError("hardy_quotient: real fields only");

  std::vector<GridFunction> du;
  for (int a = 0; a < g.dim; ++a) du.push_back(derivative(u, a));

  const std::int64_t nn = g.node_count();
  double num = 0.0, den = 0.0;
  for (std::int64_t j = 0; j < nn; ++j) {
    const Point x = g.coord(j);
    const double s = xprime_norm(x, params.k);
    const double w = quad_weight(g, j);
    double grad2 = 0.0;
    for (int a = 0; a < g.dim; ++a) grad2 += du[a][j] * du[a][j];
    num += w * std::pow(grad2, 0.5 * params.p) *
           radial_weight(s, g.spacing, params.alpha + params.p, params.k);
    den += w * std::pow(std::abs(u[j]), params.p) *
           radial_weight(s, g.spacing, params.alpha, params.k);
  }
  if (!(den > 0.0)) throw DegenerateError("hardy_quotient: zero denominator");
  return num / den;
}

double hardy_constant_probe(const HardyParams& params, int m) {
  params.validate_quotient();
  if (params.k >= params.N)
    throw ValidationError("hardy_constant_probe: needs k < N (a z direction to spread)");
  if (m < 1) throw ValidationError("hardy_constant_probe: m >= 1");

  const double p = params.p;
  const double gamma = (params.alpha + params.k) / p;

  // log-stretched near-optimal radial factor v(s) = s^(-gamma) g(log s),
  // with a smooth cos^2 taper of g at both ends of the log window.
  const double tau_lo = std::log(1e-6), tau_hi = std::log(30.0);
  const double ramp = 0.15 * (tau_hi - tau_lo);
  const int nt = 4001;
  const auto g_of = [&](double tau, double* dg) {
    if (tau <= tau_lo || tau >= tau_hi) {
      if (dg) *dg = 0.0;
      return 0.0;
    }
    double val = 1.0, der = 0.0;
    if (tau < tau_lo + ramp) {
      const double xi = (tau - tau_lo) / ramp;
      val = std::sin(0.5 * M_PI * xi);
      val *= val;
      der = 0.5 * M_PI / ramp * std::sin(M_PI * xi);
    } else if (tau > tau_hi - ramp) {
      const double xi = (tau_hi - tau) / ramp;
      val = std::sin(0.5 * M_PI * xi);
      val *= val;
      der = -0.5 * M_PI / ramp * std::sin(M_PI * xi);
    }
    if (dg) *dg = der;
    return val;
  };

  double i_num = 0.0, i_den = 0.0, i_cross = 0.0;
  const double dtau = (tau_hi - tau_lo) / (nt - 1);
  for (int i = 0; i < nt; ++i) {
    const double tau = tau_lo + i * dtau;
    double dg;
    const double gv = g_of(tau, &dg);
    const double wq = (i == 0 || i == nt - 1) ? 0.5 : 1.0;
    i_num += wq * std::pow(std::abs(dg - gamma * gv), p);
    i_den += wq * std::pow(gv, p);
    i_cross += wq * std::exp(p * tau) * std::pow(gv, p);
  }
  const double q_v = i_num / i_den;      // -> gamma^p as the window widens
  const double c_v = i_cross / i_den;    // weight transported to the w term

  // spreading factor w_m(z) = exp(-(|z|/(4m))^2) in the N-k transverse
  // dimensions; the z box must contain its support
  const double sigma = 4.0 * double(m);
  const double z_extent = 130.0;
  if (4.0 * sigma > z_extent)
    throw ResourceError("hardy_constant_probe: z box too small for m = " + std::to_string(m));
  const int dz = params.N - params.k;
  const int nz = 4001;
  const double zmax = 4.0 * sigma;
  double w_num = 0.0, w_den = 0.0;
  for (int i = 1; i < nz; ++i) {
    const double z = zmax * double(i) / (nz - 1);
    const double w = std::exp(-(z / sigma) * (z / sigma));
    const double dw = -2.0 * z / (sigma * sigma) * w;
    const double vol = std::pow(z, dz - 1);
    w_num += std::pow(std::abs(dw), p) * vol;
    w_den += std::pow(w, p) * vol;
  }
  const double ratio_w = w_num / w_den;

  return q_v + c_v * ratio_w;
}

SobolevMinimization hardy_sobolev_S(const HardyParams& params, const CartesianGrid& grid,
                                    int budget) {
  params.validate_sobolev();
  if (grid.dim != params.N)
    throw ValidationError("hardy_sobolev_S: grid dimension must equal N");
  const double q = params.q;
  const double qs = params.critical_exponent();
  const std::int64_t nn = grid.node_count();

  const auto constraint = [&](const GridFunction& u) {
    double c = 0.0;
    for (std::int64_t j = 0; j < nn; ++j) {
      const double s = xprime_norm(grid.coord(j), params.k);
      c += quad_weight(grid, j) * std::pow(std::abs(u[j]), qs) *
           radial_weight(s, grid.spacing, -params.s, params.k);
    }
    return c;
  };
  const auto energy_q = [&](const GridFunction& u) {
    double e = 0.0;
    std::vector<GridFunction> du;
    for (int a = 0; a < grid.dim; ++a) du.push_back(derivative(u, a));
    for (std::int64_t j = 0; j < nn; ++j) {
      double g2 = 0.0;
      for (int a = 0; a < grid.dim; ++a) g2 += du[a][j] * du[a][j];
      e += quad_weight(grid, j) * std::pow(g2, 0.5 * q);
    }
    return e;
  };
  const auto q_gradient = [&](const GridFunction& u) {
    // d/du of int |grad u|^q : sum_a D_a^T [ w q |grad u|^(q-2) D_a u ]
    std::vector<GridFunction> du;
    for (int a = 0; a < grid.dim; ++a) du.push_back(derivative(u, a));
    GridFunction out(grid, FieldKind::real);
    std::vector<double> tmp(nn), tmp2;
    for (int a = 0; a < grid.dim; ++a) {
      for (std::int64_t j = 0; j < nn; ++j) {
        double g2 = 0.0;
        for (int b = 0; b < grid.dim; ++b) g2 += du[b][j] * du[b][j];
        const double mag = (q == 2.0) ? 1.0 : std::pow(std::max(g2, 1e-300), 0.5 * q - 1.0);
        tmp[j] = quad_weight(grid, j) * q * mag * du[a][j];
      }
      detail::derivative_transpose(grid, tmp, a, tmp2);
      for (std::int64_t j = 0; j < nn; ++j) out[j] += tmp2[j];
    }
    return out;
  };

  // centered bump start, normalized to the constraint
  GridFunction u = GridFunction::sample(grid, [&](const Point& x) {
    double r2 = 0.0;
    for (int a = 0; a < grid.dim; ++a) r2 += x[a] * x[a];
    return std::exp(-r2 / (0.15 * grid.radius * grid.radius));
  });
  u *= 1.0 / std::pow(constraint(u), 1.0 / qs);

  SobolevMinimization out{energy_q(u), false, 0, u};
  double step = 0.5;
  for (int it = 0; it < budget; ++it) {
    out.iterations = it + 1;
    const GridFunction gr = q_gradient(u);
    double gn = 0.0;
    for (std::int64_t j = 0; j < nn; ++j) gn += gr[j] * gr[j];
    gn = std::sqrt(gn);
    if (gn < 1e-14) {
      out.converged = true;
      break;
    }
    bool improved = false;
    for (int half = 0; half < 25; ++half) {
      GridFunction trial = u;
      for (std::int64_t j = 0; j < nn; ++j) trial[j] -= step / gn * gr[j];
      const double c = constraint(trial);
      if (c > 0.0) {
        trial *= 1.0 / std::pow(c, 1.0 / qs);
        const double e = energy_q(trial);
        if (e < out.value) {
          const double rel = (out.value - e) / std::max(out.value, 1e-300);
          u = std::move(trial);
          out.value = e;
          improved = true;
          step *= 1.3;
          if (rel < 1e-6) {
            out.converged = true;
            it = budget; // double break
          }
          break;
        }
      }
      step *= 0.5;
    }
    if (!improved) {
      out.converged = true;
      break;
    }
  }
  out.minimizer = u;
  return out;
}

std::vector<double> aubin_talenti_quotient(int n, const std::vector<double>& eps_values,
                                           const CartesianGrid& grid) {
  if (n < 3) throw ValidationError("aubin_talenti_quotient: n >= 3 required");
  if (grid.dim != n) throw ValidationError("aubin_talenti_quotient: grid dimension mismatch");
  const double crit = 2.0 * n / double(n - 2);
  const double R = grid.radius;
  const std::int64_t nn = grid.node_count();

  std::vector<double> out;
  for (double eps : eps_values) {
    if (!(eps > 0.0)) throw ValidationError("aubin_talenti_quotient: eps must be positive");
    GridFunction u = GridFunction::sample(grid, [&](const Point& x) {
      double r2 = 0.0;
      for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
      const double r = std::sqrt(r2);
      double cut = 1.0;
      if (r > 0.7 * R) {
        if (r >= 0.98 * R) return 0.0;
        const double xi = (r - 0.7 * R) / (0.28 * R);
        cut = std::cos(0.5 * M_PI * xi);
        cut *= cut;
      }
      return cut * std::pow(eps + r2, -0.5 * (n - 2));
    });
    double num = 0.0, den = 0.0;
    std::vector<GridFunction> du;
    for (int a = 0; a < n; ++a) du.push_back(derivative(u, a));
    for (std::int64_t j = 0; j < nn; ++j) {
      const double w = quad_weight(grid, j);
      double g2 = 0.0;
      for (int a = 0; a < n; ++a) g2 += du[a][j] * du[a][j];
      num += w * g2;
      den += w * std::pow(std::abs(u[j]), crit);
    }
    out.push_back(num / std::pow(den, 2.0 / crit));
  }
  return out;
}

namespace {

double sphere_area(int n) {
  // surface of the unit (n-1)-sphere
  return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

struct RadialQuotient {
  int n;
  double lambda;
  double crit;
  double h;
  std::vector<double> r;

  double operator()(const std::vector<double>& u) const {
    const size_t m = u.size();
    const double omega = sphere_area(n);
    double stiff = 0.0, mass = 0.0, nl = 0.0;
    for (size_t i = 0; i + 1 < m; ++i) {
      const double rm = 0.5 * (r[i] + r[i + 1]);
      const double du = (u[i + 1] - u[i]) / h;
      stiff += du * du * std::pow(rm, n - 1) * h;
      const double um = 0.5 * (u[i] + u[i + 1]);
      mass += um * um * std::pow(rm, n - 1) * h;
      nl += std::pow(std::abs(um), crit) * std::pow(rm, n - 1) * h;
    }
    stiff *= omega;
    mass *= omega;
    nl *= omega;
    return (stiff - lambda * mass) / std::pow(nl, 2.0 / crit);
  }
};

} // namespace

double brezis_nirenberg_S_lambda(double lambda, int n, int radial_points) {
  if (n < 3) throw ValidationError("brezis_nirenberg_S_lambda: n >= 3 required");
  const double lam1 = lambda1_ball_radial(n);
  if (lambda < 0.0 || lambda >= lam1)
    throw DomainError("brezis_nirenberg_S_lambda: lambda outside [0, lambda_1)");

  const int m = std::max(radial_points, 257);
  RadialQuotient quot;
  quot.n = n;
  quot.lambda = lambda;
  quot.crit = 2.0 * n / double(n - 2);
  quot.h = 1.0 / (m - 1);
  quot.r.resize(m);
  for (int i = 0; i < m; ++i) quot.r[i] = i * quot.h;

  const auto family = [&](double eps) {
    std::vector<double> u(m);
    for (int i = 0; i < m; ++i) {
      const double r = quot.r[i];
      double cut;
      if (r <= 0.25)
        cut = 1.0;
      else if (r >= 0.75)
        cut = 0.0;
      else {
        const double xi = (r - 0.25) / 0.5;
        cut = std::cos(0.5 * M_PI * xi);
        cut *= cut;
      }
      u[i] = cut / std::pow(eps + r, 0.5 * (n - 2));
    }
    return u;
  };

  // scan the cut-off family in eps, then golden-section refine
  double best_eps = 1.0, best_val = 1e300;
  for (double le = -9.0; le <= 0.0; le += 0.25) {
    const double eps = std::pow(10.0, le);
    const double v = quot(family(eps));
    if (v < best_val) {
      best_val = v;
      best_eps = eps;
    }
  }
  {
    double lo = best_eps / 3.0, hi = best_eps * 3.0;
    for (int it = 0; it < 60; ++it) {
      const double m1 = lo + 0.382 * (hi - lo), m2 = lo + 0.618 * (hi - lo);
      if (quot(family(m1)) < quot(family(m2)))
        hi = m2;
      else
        lo = m1;
    }
    best_eps = 0.5 * (lo + hi);
    best_val = quot(family(best_eps));
  }

  // local descent over the radial node values
  std::vector<double> u = family(best_eps);
  double cur = quot(u);
  double step = 0.02;
  std::vector<double> grad(m);
  for (int it = 0; it < 200; ++it) {
    const double fd = 1e-6;
    double gn = 0.0;
    for (int i = 0; i + 1 < m; ++i) { // u(1) = 0 stays fixed
      std::vector<double> up = u;
      up[i] += fd;
      grad[i] = (quot(up) - cur) / fd;
      gn += grad[i] * grad[i];
    }
    grad[m - 1] = 0.0;
    gn = std::sqrt(gn);
    if (gn < 1e-12 * (1.0 + std::abs(cur))) break;
    bool improved = false;
    for (int half = 0; half < 20; ++half) {
      std::vector<double> trial = u;
      for (int i = 0; i < m; ++i) trial[i] -= step / gn * grad[i];
      const double v = quot(trial);
      if (v < cur - 1e-14) {
        u = std::move(trial);
        cur = v;
        improved = true;
        step *= 1.5;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return cur;
}

double lambda1_ball_radial(int n, int radial_points) {
  if (n < 1) throw ValidationError("lambda1_ball_radial: n >= 1");
  const int m = radial_points;
  const double h = 1.0 / (m - 1);
  // unknowns u_0..u_(m-2); u_(m-1) = 0 (Dirichlet at r = 1)
  const int dof = m - 1;
  std::vector<double> u(dof, 1.0), tmp(dof);

  // tridiagonal application of the radial operator
  const auto build = [&](double shift, std::vector<double>& lo, std::vector<double>& di,
                         std::vector<double>& up) {
    lo.assign(dof, 0.0);
    di.assign(dof, 0.0);
    up.assign(dof, 0.0);
    // r = 0 row: -n u''(0) = lambda u -> -2n (u_1 - u_0)/h^2
    di[0] = 2.0 * n / (h * h) - shift;
    up[0] = -2.0 * n / (h * h);
    for (int i = 1; i < dof; ++i) {
      const double r = i * h;
      const double a = 1.0 / (h * h);
      const double b = (n - 1) / (2.0 * h * r);
      lo[i] = -a + b;
      di[i] = 2.0 * a - shift;
      up[i] = -a - b;
    }
    return;
  };

  double lam = 0.0;
  for (int it = 0; it < 60; ++it) {
    std::vector<double> lo, di, up, rhs = u;
    build(0.0, lo, di, up); // plain inverse iteration (operator PD)
    // Thomas
    for (int i = 1; i < dof; ++i) {
      const double f = lo[i] / di[i - 1];
      di[i] -= f * up[i - 1];
      rhs[i] -= f * rhs[i - 1];
    }
    rhs[dof - 1] /= di[dof - 1];
    for (int i = dof - 2; i >= 0; --i) rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / di[i];

    double nrm = 0.0;
    for (double v : rhs) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (int i = 0; i < dof; ++i) rhs[i] /= nrm;

    // Rayleigh quotient with the (non-symmetrized) operator
    std::vector<double> lo2, di2, up2;
    build(0.0, lo2, di2, up2);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < dof; ++i) {
      double av = di2[i] * rhs[i];
      if (i > 0) av += lo2[i] * rhs[i - 1];
      if (i + 1 < dof) av += up2[i] * rhs[i + 1];
      num += av * rhs[i];
      den += rhs[i] * rhs[i];
    }
    const double lam_new = num / den;
    u = rhs;
    if (it > 4 && std::abs(lam_new - lam) < 1e-12 * (1.0 + std::abs(lam_new))) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
  }
  return lam;
}

double lambda1_ball(int n, const CartesianGrid& grid) {
  if (n < 1 || n > 3) throw ValidationError("lambda1_ball: n in {1,2,3}");
  if (grid.dim != n) throw ValidationError("lambda1_ball: grid dimension mismatch");
  if (!(grid.radius > 1.0))
    throw ValidationError("lambda1_ball: grid must strictly contain the unit ball");

  const std::int64_t nn = grid.node_count();
  const double h = grid.spacing;

  // interior nodes and Shortley-Weller arm lengths
  std::vector<std::int64_t> dof_of(nn, -1);
  std::vector<std::int64_t> node_of;
  for (std::int64_t j = 0; j < nn; ++j) {
    const Point x = grid.coord(j);
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
    if (r2 < 1.0) {
      dof_of[j] = static_cast<std::int64_t>(node_of.size());
      node_of.push_back(j);
    }
  }
  const std::int64_t dof = static_cast<std::int64_t>(node_of.size());
  if (dof == 0) throw SolverError("lambda1_ball: no interior nodes");

  struct Arm {
    std::int64_t nb;  // dof index of the neighbor, -1 if boundary cut
    double theta;     // arm length in units of h
  };
  std::vector<std::array<Arm, 6>> arms(dof);
  int idx[3];
  for (std::int64_t d = 0; d < dof; ++d) {
    const std::int64_t j = node_of[d];
    grid.decompose(j, idx);
    const Point x = grid.coord(j);
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
    for (int a = 0; a < n; ++a) {
      const std::int64_t s = grid.stride(a);
      for (int dir = 0; dir < 2; ++dir) {
        const double sgn = dir == 0 ? -1.0 : 1.0;
        Arm arm{-1, 1.0};
        const int i2 = idx[a] + (dir == 0 ? -1 : 1);
        std::int64_t jn = -1;
        if (i2 >= 0 && i2 < grid.points_per_axis) jn = j + (dir == 0 ? -s : s);
        if (jn >= 0 && dof_of[jn] >= 0) {
          arm.nb = dof_of[jn];
          arm.theta = 1.0;
        } else {
          // cut by the sphere: t^2 + 2 sgn x_a t + (|x|^2 - 1) = 0
          const double t = -sgn * x[a] + std::sqrt(x[a] * x[a] + 1.0 - r2);
          arm.nb = -1;
          arm.theta = std::min(1.0, std::max(1e-6, t / h));
        }
        arms[d][2 * a + dir] = arm;
      }
    }
  }

  // matrix-free Shortley-Weller apply of -lap
  const auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    out.assign(dof, 0.0);
    for (std::int64_t d = 0; d < dof; ++d) {
      double acc = 0.0;
      for (int a = 0; a < n; ++a) {
        const Arm& west = arms[d][2 * a];
        const Arm& east = arms[d][2 * a + 1];
        const double tw = west.theta, te = east.theta;
        const double uw = west.nb >= 0 ? v[west.nb] : 0.0;
        const double ue = east.nb >= 0 ? v[east.nb] : 0.0;
        acc += 2.0 / (h * h) *
               (v[d] / (tw * te) - uw / (tw * (tw + te)) - ue / (te * (tw + te)));
      }
      out[d] = acc;
    }
  };

  // inverse iteration with BiCGStab solves (the SW operator is mildly
  // non-symmetric near the boundary)
  std::vector<double> v(dof), av(dof);
  for (std::int64_t d = 0; d < dof; ++d) {
    const Point x = grid.coord(node_of[d]);
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
    v[d] = 1.0 - r2;
  }

  const auto bicgstab = [&](const std::vector<double>& b, std::vector<double>& x) {
    const std::int64_t m = dof;
    std::vector<double> r(m), r0(m), pvec(m, 0.0), vv(m, 0.0), svec(m), tvec(m);
    apply(x, av);
    double bn = 0.0;
    for (std::int64_t i = 0; i < m; ++i) {
      r[i] = b[i] - av[i];
      r0[i] = r[i];
      bn += b[i] * b[i];
    }
    bn = std::sqrt(bn);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (int it = 0; it < 20000; ++it) {
      double rho1 = 0.0;
      for (std::int64_t i = 0; i < m; ++i) rho1 += r0[i] * r[i];
      if (rho1 == 0.0) break;
      if (it == 0) {
        pvec = r;
      } else {
        const double beta = (rho1 / rho) * (alpha / omega);
        for (std::int64_t i = 0; i < m; ++i)
          pvec[i] = r[i] + beta * (pvec[i] - omega * vv[i]);
      }
      rho = rho1;
      apply(pvec, vv);
      double r0v = 0.0;
      for (std::int64_t i = 0; i < m; ++i) r0v += r0[i] * vv[i];
      alpha = rho / r0v;
      for (std::int64_t i = 0; i < m; ++i) svec[i] = r[i] - alpha * vv[i];
      apply(svec, tvec);
      double tt = 0.0, ts = 0.0;
      for (std::int64_t i = 0; i < m; ++i) {
        tt += tvec[i] * tvec[i];
        ts += tvec[i] * svec[i];
      }
      omega = tt > 0.0 ? ts / tt : 0.0;
      double rn = 0.0;
      for (std::int64_t i = 0; i < m; ++i) {
        x[i] += alpha * pvec[i] + omega * svec[i];
        r[i] = svec[i] - omega * tvec[i];
        rn += r[i] * r[i];
      }
      if (std::sqrt(rn) <= 1e-11 * (1.0 + bn)) return;
    }
    throw SolverError("lambda1_ball: BiCGStab failed to converge");
  };

  double lam = 0.0;
  for (int it = 0; it < 50; ++it) {
    std::vector<double> x(dof, 0.0);
    bicgstab(v, x);
    double nrm = 0.0;
    for (double t : x) nrm += t * t;
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0)) throw SolverError("lambda1_ball: inverse iteration collapsed");
    for (std::int64_t i = 0; i < dof; ++i) x[i] /= nrm;
    apply(x, av);
    double num = 0.0;
    for (std::int64_t i = 0; i < dof; ++i) num += av[i] * x[i];
    v = x;
    if (it > 3 && std::abs(num - lam) < 1e-10 * (1.0 + std::abs(num))) return num;
    lam = num;
  }
  return lam;
}

} // namespace concentra
