#include "concentra/reduction.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "energy_context.hpp"

namespace concentra {

using detail::EnergyContext;

namespace {

GridFunction scaled(const GridFunction& f, double c) {
  GridFunction out = f;
  out *= c;
  return out;
}

void project_out(GridFunction& f, const std::vector<GridFunction>& basis) {
  for (const auto& t : basis) {
    const double c = h1_inner(f, t);
    const std::int64_t m = static_cast<std::int64_t>(f.raw().size());
    for (std::int64_t i = 0; i < m; ++i) f.raw()[i] -= c * t.raw()[i];
  }
}

} // namespace

TangentBasis tangent_basis(const GridFunction& z, TangentBasis::Kind kind) {
  TangentBasis basis;
  basis.kind = kind;
  const int dim = z.grid().dim;
  for (int a = 0; a < dim; ++a) {
    GridFunction t = derivative(z, a);
    t *= -1.0;
    basis.vectors.push_back(std::move(t));
  }
  if (kind == TangentBasis::Kind::translation_phase) {
    if (!z.is_complex())
      throw ValidationError("tangent_basis: translation_phase needs a complex field");
    GridFunction iz(z.grid(), FieldKind::complex_);
    const std::int64_t n = z.grid().node_count();
    for (std::int64_t j = 0; j < n; ++j)
      iz.set_cval(j, std::complex<double>(0.0, 1.0) * z.cval(j));
    basis.vectors.push_back(std::move(iz));
  }

  const double scale = h1_norm(z);
  // modified Gram-Schmidt, twice for orthonormality well below 1e-10
  for (int pass = 0; pass < 2; ++pass) {
    for (size_t i = 0; i < basis.vectors.size(); ++i) {
      for (size_t k = 0; k < i; ++k) {
        const double c = h1_inner(basis.vectors[i], basis.vectors[k]);
        const std::int64_t m = static_cast<std::int64_t>(basis.vectors[i].raw().size());
        for (std::int64_t q = 0; q < m; ++q)
          basis.vectors[i].raw()[q] -= c * basis.vectors[k].raw()[q];
      }
      const double nrm = h1_norm(basis.vectors[i]);
      if (nrm < 1e-12 * (1.0 + scale))
        throw ValidationError("tangent_basis: rank deficiency, degenerate ansatz");
      basis.vectors[i] *= 1.0 / nrm;
    }
  }
  return basis;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Rows of the central-difference matrix along `axis` at global node j.
// Fills up to two (column, value) pairs.
int d_row(const CartesianGrid& g, std::int64_t j, int axis, const int* idx,
          std::pair<std::int64_t, double>* out) {
  const int M = g.points_per_axis;
  const std::int64_t s = g.stride(axis);
  const double invh = 1.0 / g.spacing, inv2h = 0.5 / g.spacing;
  const int i = idx[axis];
  if (i == 0) {
    out[0] = {j, -invh};
    out[1] = {j + s, invh};
  } else if (i == M - 1) {
    out[0] = {j - s, -invh};
    out[1] = {j, invh};
  } else {
    out[0] = {j - s, -inv2h};
    out[1] = {j + s, inv2h};
  }
  return 2;
}

/// Assembles the strong Hessian of f_eps at u as a symmetric sparse matrix
/// (scaled by h^n), in interleaved (re, im) layout for complex fields.
SpMat assemble_hessian(const EnergyContext& ctx, const GridFunction& u) {
  const CartesianGrid& g = ctx.grid;
  const std::int64_t n = g.node_count();
  const bool cplx = ctx.kind == FieldKind::complex_;
  const int comps = cplx ? 2 : 1;
  const std::int64_t dofs = comps * n;
  const double hn = ctx.hn;
  const double p = ctx.p;

  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(dofs) * (2 * g.dim * comps + 3));

  int idx[3];
  std::pair<std::int64_t, double> row[2];

  if (!cplx) {
    const double invh2 = 1.0 / (g.spacing * g.spacing);
    for (std::int64_t j = 0; j < n; ++j) {
      g.decompose(j, idx);
      double diag = 1.0 + ctx.Vc[j];
      const double mod = std::abs(u[j]);
      diag -= ctx.Kc[j] * p * (mod > 0.0 ? std::pow(mod, p - 1.0) : 0.0);
      // -lap stencil
      for (int a = 0; a < g.dim; ++a) {
        const std::int64_t s = g.stride(a);
        diag += 2.0 * invh2;
        if (idx[a] > 0) trip.emplace_back(j, j - s, -invh2 * hn);
        if (idx[a] < g.points_per_axis - 1) trip.emplace_back(j, j + s, -invh2 * hn);
      }
      trip.emplace_back(j, j, diag * hn);
    }
  } else {
    // kinetic: sum_a [ D^T D + A^2  on both components,
    //                  (D^T A - A D) coupling re <- im, minus transpose ]
    for (int a = 0; a < g.dim; ++a) {
      const bool has_a = ctx.magnetic && !ctx.Ac[a].empty();
      for (std::int64_t j = 0; j < n; ++j) {
        g.decompose(j, idx);
        const int cnt = d_row(g, j, a, idx, row);
        for (int r1 = 0; r1 < cnt; ++r1)
          for (int r2 = 0; r2 < cnt; ++r2) {
            const double v = row[r1].second * row[r2].second * hn;
            trip.emplace_back(2 * row[r1].first, 2 * row[r2].first, v);
            trip.emplace_back(2 * row[r1].first + 1, 2 * row[r2].first + 1, v);
          }
        if (has_a) {
          const double aj = ctx.Ac[a][j];
          trip.emplace_back(2 * j, 2 * j, aj * aj * hn);
          trip.emplace_back(2 * j + 1, 2 * j + 1, aj * aj * hn);
          // B = D^T A - A D ; contributes (re <- im): +B, (im <- re): -B
          for (int r1 = 0; r1 < cnt; ++r1) {
            // D^T A: entry (col(r1), j) = v1 * A_j
            const double v1 = row[r1].second * aj * hn;
            trip.emplace_back(2 * row[r1].first, 2 * j + 1, v1);
            trip.emplace_back(2 * row[r1].first + 1, 2 * j, -v1);
            // A D: entry (j, col(r1)) = A_j * v1
            trip.emplace_back(2 * j, 2 * row[r1].first + 1, -v1);
            trip.emplace_back(2 * j + 1, 2 * row[r1].first, v1);
          }
        }
      }
    }
    for (std::int64_t j = 0; j < n; ++j) {
      const std::complex<double> uv = u.cval(j);
      const double mod = std::abs(uv);
      const double base = 1.0 + ctx.Vc[j];
      double m1 = 0.0, m3 = 0.0;
      if (mod > 0.0) {
        m1 = std::pow(mod, p - 1.0);
        m3 = (p - 1.0) * m1 / (mod * mod);
      }
      const double k = ctx.Kc[j];
      const double drr = base - k * (m1 + m3 * uv.real() * uv.real());
      const double dii = base - k * (m1 + m3 * uv.imag() * uv.imag());
      const double dri = -k * m3 * uv.real() * uv.imag();
      trip.emplace_back(2 * j, 2 * j, drr * hn);
      trip.emplace_back(2 * j + 1, 2 * j + 1, dii * hn);
      trip.emplace_back(2 * j, 2 * j + 1, dri * hn);
      trip.emplace_back(2 * j + 1, 2 * j, dri * hn);
    }
  }

  SpMat mat(dofs, dofs);
  mat.setFromTriplets(trip.begin(), trip.end());
  return mat;
}

/// Interleaved vector h^n (1 - lap) t, the column a tangent vector
/// contributes to the bordered matrix.
Eigen::VectorXd riesz_weighted(const EnergyContext& ctx, const GridFunction& t) {
  const std::int64_t n = ctx.grid.node_count();
  const int comps = t.is_complex() ? 2 : 1;
  const GridFunction lap = laplacian_apply(t);
  Eigen::VectorXd out(comps * n);
  for (std::int64_t j = 0; j < n; ++j)
    for (int c = 0; c < comps; ++c)
      out[comps * j + c] = ctx.hn * (t.raw()[comps * j + c] - lap.raw()[comps * j + c]);
  return out;
}

struct BorderedSystem {
  Eigen::SparseLU<SpMat> lu;
  std::int64_t dofs = 0;
  int nb = 0;
  bool ok = false;

  void factor(const SpMat& hess, const std::vector<Eigen::VectorXd>& borders) {
    dofs = hess.rows();
    nb = static_cast<int>(borders.size());
    std::vector<Triplet> trip;
    trip.reserve(hess.nonZeros() + 2 * static_cast<size_t>(dofs) * nb);
    for (int k = 0; k < hess.outerSize(); ++k)
      for (SpMat::InnerIterator it(hess, k); it; ++it)
        trip.emplace_back(it.row(), it.col(), it.value());
    for (int b = 0; b < nb; ++b)
      for (std::int64_t i = 0; i < dofs; ++i) {
        if (borders[b][i] == 0.0) continue;
        trip.emplace_back(i, dofs + b, borders[b][i]);
        trip.emplace_back(dofs + b, i, borders[b][i]);
      }
    SpMat full(dofs + nb, dofs + nb);
    full.setFromTriplets(trip.begin(), trip.end());
    full.makeCompressed();
    lu.compute(full);
    ok = lu.info() == Eigen::Success;
  }

  /// Solves [H B; B^T 0][x; mu] = [rhs; 0]; returns x, fills mu.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs_top, Eigen::VectorXd* mu = nullptr) const {
    Eigen::VectorXd rhs(dofs + nb);
    rhs.head(dofs) = rhs_top;
    rhs.tail(nb).setZero();
    Eigen::VectorXd sol = lu.solve(rhs);
    if (mu) *mu = sol.tail(nb);
    return sol.head(dofs);
  }
};

GridFunction from_vector(const CartesianGrid& g, FieldKind kind, const Eigen::VectorXd& v) {
  GridFunction out(g, kind);
  for (size_t i = 0; i < out.raw().size(); ++i) out.raw()[i] = v[static_cast<Eigen::Index>(i)];
  return out;
}

Eigen::VectorXd to_vector(const GridFunction& f) {
  Eigen::VectorXd v(f.raw().size());
  for (size_t i = 0; i < f.raw().size(); ++i) v[static_cast<Eigen::Index>(i)] = f.raw()[i];
  return v;
}

double projected_residual(const EnergyContext& ctx, const GridFunction& u,
                          const std::vector<GridFunction>& basis, GridFunction* riesz_out) {
  const GridFunction s = ctx.strong_gradient(u);
  GridFunction gr = ctx.riesz(s, 1e-12);
  if (riesz_out) *riesz_out = gr;
  GridFunction gp = gr;
  project_out(gp, basis);
  return h1_norm(gp);
}

/// Smallest |eigenvalue| of the projected Hessian on the orthogonal
/// complement of `border_fields`, by inverse iteration through the bordered
/// factorization.
double smallest_eigenvalue(const EnergyContext& ctx, const SpMat& hess,
                           const std::vector<GridFunction>& border_fields,
                           const CartesianGrid& g, FieldKind kind) {
  std::vector<Eigen::VectorXd> borders;
  for (const auto& t : border_fields) borders.push_back(riesz_weighted(ctx, t));
  BorderedSystem sys;
  sys.factor(hess, borders);
  if (!sys.ok) throw SolverError("coercivity: bordered factorization failed");

  GridFunction y(g, kind);
  for (size_t i = 0; i < y.raw().size(); ++i)
    y.raw()[i] = std::sin(0.7 * double(i) + 0.3); // deterministic start
  project_out(y, border_fields);
  const double ynrm = h1_norm(y);
  if (ynrm == 0.0) throw SolverError("coercivity: degenerate start vector");
  y *= 1.0 / ynrm;

  double rho_prev = 0.0;
  for (int it = 0; it < 40; ++it) {
    Eigen::VectorXd rhs = riesz_weighted(ctx, y);
    Eigen::VectorXd xv = sys.solve(rhs);
    GridFunction x = from_vector(g, kind, xv);
    project_out(x, border_fields);
    const double nrm = h1_norm(x);
    if (!(nrm > 0.0)) throw SolverError("coercivity: inverse iteration collapsed");
    x *= 1.0 / nrm;
    // Rayleigh quotient <L x, x> in the H1 pairing = x^T Hess x (strong form)
    Eigen::VectorXd xvec = to_vector(x);
    const double rho = xvec.dot(hess * xvec);
    y = x;
    if (it > 3 && std::abs(rho - rho_prev) <= 1e-10 * (1.0 + std::abs(rho))) return rho;
    rho_prev = rho;
  }
  return rho_prev;
}

struct SolveScratch {
  GridFunction z;
  TangentBasis basis;
  EnergyContext ctx;
  std::vector<Eigen::VectorXd> borders;
  FieldKind kind = FieldKind::real;
};

SolveScratch prepare(const ProblemSpec& spec, const RadialProfile& profile,
                     const CartesianGrid& grid, const Point& xi, double sigma) {
  SolveScratch s;
  const bool cplx = spec.has_magnetic() || sigma != 0.0;
  s.kind = cplx ? FieldKind::complex_ : FieldKind::real;
  s.z = cplx ? build_magnetic_ansatz(profile, spec, xi, sigma, grid)
             : build_ansatz(profile, spec, xi, grid);
  s.basis = tangent_basis(s.z, cplx ? TangentBasis::Kind::translation_phase
                                    : TangentBasis::Kind::translation);
  s.ctx = EnergyContext::assemble(spec, grid, s.kind, EvalOptions{});
  for (const auto& t : s.basis.vectors) s.borders.push_back(riesz_weighted(s.ctx, t));
  return s;
}

CorrectionResult solve_correction_on(SolveScratch& s, const ProblemSpec& spec,
                                     const RadialProfile& profile, const CartesianGrid& grid,
                                     const Point& xi, double sigma,
                                     const ReductionOptions& opts, const GridFunction* warm) {
  const double scale = std::max(1.0, h1_norm(s.z));
  const double tol = opts.newton_rtol * scale;

  GridFunction w = warm ? *warm : GridFunction(grid, s.kind);
  if (warm) project_out(w, s.basis.vectors);
  GridFunction u = s.z;
  u += w;

  GridFunction gr(grid, s.kind);
  double res = projected_residual(s.ctx, u, s.basis.vectors, &gr);

  int iter = 0;
  while (res > tol) {
    if (++iter > opts.max_newton)
      throw ConvergenceError("solve_correction: Newton stalled after " +
                             std::to_string(opts.max_newton) + " steps, residual " +
                             std::to_string(res));
    const SpMat hess = assemble_hessian(s.ctx, u);
    BorderedSystem sys;
    sys.factor(hess, s.borders);
    if (!sys.ok)
      throw SolverError(
          "solve_correction: ill-conditioned reduction, bordered factorization failed "
          "(coercivity loss)");
    const GridFunction sg = s.ctx.strong_gradient(u);
    Eigen::VectorXd rhs = -s.ctx.hn * to_vector(sg);
    Eigen::VectorXd step = sys.solve(rhs);

    double lambda = 1.0;
    bool accepted = false;
    for (int half = 0; half < 9; ++half) {
      GridFunction w_try = w;
      for (size_t i = 0; i < w_try.raw().size(); ++i)
        w_try.raw()[i] += lambda * step[static_cast<Eigen::Index>(i)];
      project_out(w_try, s.basis.vectors);
      GridFunction u_try = s.z;
      u_try += w_try;
      const double res_try = projected_residual(s.ctx, u_try, s.basis.vectors, &gr);
      if (res_try < res) {
        w = std::move(w_try);
        u = std::move(u_try);
        res = res_try;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted)
      throw ConvergenceError("solve_correction: line search failed at residual " +
                             std::to_string(res));
  }

  CorrectionResult out{GridFunction(grid, s.kind), {}, {}};
  out.w = w;
  out.diag.eps = spec.epsilon;
  out.diag.xi = xi;
  out.diag.sigma = sigma;
  out.diag.w_norm = h1_norm(w);
  out.diag.phi = s.ctx.value(u);
  out.diag.grad_norm = res;

  // multipliers: components of grad f_eps(z+w) along the tangent basis
  const GridFunction sg = s.ctx.strong_gradient(u);
  const GridFunction grz = s.ctx.riesz(sg, 1e-12);
  for (const auto& t : s.basis.vectors) out.multipliers.push_back(h1_inner(grz, t));

  // reduced gradient via d/dxi_i of the ansatz
  const double dstep = 1e-4 * (1.0 + std::abs(xi[0]) + std::abs(xi[1]) + std::abs(xi[2]));
  for (int a = 0; a < grid.dim; ++a) {
    Point xp = xi, xm = xi;
    xp[a] += dstep;
    xm[a] -= dstep;
    GridFunction dz = s.kind == FieldKind::complex_
                          ? build_magnetic_ansatz(profile, spec, xp, sigma, grid)
                          : build_ansatz(profile, spec, xp, grid);
    const GridFunction zm = s.kind == FieldKind::complex_
                                ? build_magnetic_ansatz(profile, spec, xm, sigma, grid)
                                : build_ansatz(profile, spec, xm, grid);
    dz -= zm;
    dz *= 1.0 / (2.0 * dstep);
    double acc = 0.0;
    for (size_t k = 0; k < s.basis.vectors.size(); ++k)
      acc += out.multipliers[k] * h1_inner(s.basis.vectors[k], dz);
    out.diag.reduced_grad[a] = acc;
  }

  if (opts.with_coercivity) {
    const SpMat hess_z = assemble_hessian(s.ctx, s.z);
    std::vector<GridFunction> extended = s.basis.vectors;
    GridFunction zp = s.z;
    project_out(zp, s.basis.vectors);
    const double zn = h1_norm(zp);
    if (zn > 0.0) {
      zp *= 1.0 / zn;
      extended.push_back(std::move(zp));
    }
    const double rho = smallest_eigenvalue(s.ctx, hess_z, extended, grid, s.kind);
    out.diag.coercivity = std::abs(rho);
    if (out.diag.coercivity < opts.coercivity_floor)
      throw SolverError("solve_correction: ill-conditioned reduction, coercivity " +
                        std::to_string(out.diag.coercivity) + " below floor " +
                        std::to_string(opts.coercivity_floor));
  }
  return out;
}

} // namespace

CorrectionResult solve_correction(const ProblemSpec& spec, const RadialProfile& profile,
                                  const CartesianGrid& grid, const Point& xi, double sigma,
                                  const ReductionOptions& opts) {
  spec.validate();
  SolveScratch s = prepare(spec, profile, grid, xi, sigma);
  return solve_correction_on(s, spec, profile, grid, xi, sigma, opts, nullptr);
}

double reduced_energy(const ProblemSpec& spec, const RadialProfile& profile,
                      const CartesianGrid& grid, const Point& xi, double sigma,
                      const ReductionOptions& opts) {
  ReductionOptions o = opts;
  o.with_coercivity = false;
  return solve_correction(spec, profile, grid, xi, sigma, o).diag.phi;
}

AuxiliaryFunction::AuxiliaryFunction(const ProblemSpec& spec) : spec_(spec) {
  theta_ = (spec.p + 1.0) / (spec.p - 1.0) - 0.5 * spec.n;
  if (!(theta_ > 0.0))
    throw ValidationError("AuxiliaryFunction: theta = (p+1)/(p-1) - n/2 must be positive "
                          "(p subcritical)");
}

double AuxiliaryFunction::value(const Point& x) const {
  const double ov = 1.0 + spec_.V_at(x);
  const double k = spec_.K_at(x);
  if (!(ov > 0.0)) throw DomainError("auxiliary_value: 1+V(x) <= 0");
  if (!(k > 0.0)) throw DomainError("auxiliary_value: K(x) <= 0");
  return std::pow(ov, theta_) / std::pow(k, 2.0 / (spec_.p - 1.0));
}

Point AuxiliaryFunction::grad(const Point& x) const {
  Point g{0.0, 0.0, 0.0};
  for (int a = 0; a < spec_.n; ++a) {
    const double h = fd_step_ * (1.0 + std::abs(x[a]));
    Point xp = x, xm = x, xp2 = x, xm2 = x;
    xp[a] += h;
    xm[a] -= h;
    xp2[a] += 2 * h;
    xm2[a] -= 2 * h;
    g[a] = (-value(xp2) + 8.0 * value(xp) - 8.0 * value(xm) + value(xm2)) / (12.0 * h);
  }
  return g;
}

std::array<std::array<double, 3>, 3> AuxiliaryFunction::hess(const Point& x) const {
  std::array<std::array<double, 3>, 3> h{};
  for (int a = 0; a < spec_.n; ++a) {
    const double ha = fd_step_ * (1.0 + std::abs(x[a]));
    Point xp = x, xm = x, xp2 = x, xm2 = x;
    xp[a] += ha;
    xm[a] -= ha;
    xp2[a] += 2 * ha;
    xm2[a] -= 2 * ha;
    h[a][a] = (-value(xp2) + 16.0 * value(xp) - 30.0 * value(x) + 16.0 * value(xm) -
               value(xm2)) /
              (12.0 * ha * ha);
    for (int b = a + 1; b < spec_.n; ++b) {
      const double hb = fd_step_ * (1.0 + std::abs(x[b]));
      Point pp = x, pm = x, mp = x, mm = x;
      pp[a] += ha; pp[b] += hb;
      pm[a] += ha; pm[b] -= hb;
      mp[a] -= ha; mp[b] += hb;
      mm[a] -= ha; mm[b] -= hb;
      h[a][b] = h[b][a] = (value(pp) - value(pm) - value(mp) + value(mm)) / (4.0 * ha * hb);
    }
  }
  return h;
}

double reduced_expansion_constant(const RadialProfile& profile) {
  const int n = profile.n;
  const double omega = n == 1 ? 2.0 : (n == 2 ? 2.0 * M_PI : 4.0 * M_PI);
  double c0 = 0.0;
  for (size_t i = 0; i + 1 < profile.radii.size(); ++i) {
    const double r0 = profile.radii[i], r1 = profile.radii[i + 1];
    const double f0 = std::pow(profile.values[i], profile.p + 1.0) * std::pow(r0, n - 1);
    const double f1 = std::pow(profile.values[i + 1], profile.p + 1.0) * std::pow(r1, n - 1);
    c0 += 0.5 * (f0 + f1) * (r1 - r0);
  }
  c0 *= omega;
  return c0 * (0.5 - 1.0 / (profile.p + 1.0));
}

namespace {

double grad_norm_d(const std::array<double, 3>& g, int d) {
  double acc = 0.0;
  for (int a = 0; a < d; ++a) acc += g[a] * g[a];
  return std::sqrt(acc);
}

} // namespace

ConcentrationSearch find_concentration_points(const ProblemSpec& spec,
                                              const RadialProfile& profile,
                                              const CartesianGrid& grid, const Point& box_lo,
                                              const Point& box_hi, int multistart,
                                              const ReductionOptions& opts) {
  spec.validate();
  const int d = spec.n;
  const double eps = spec.epsilon;
  for (int a = 0; a < d; ++a) {
    if (!(box_lo[a] < box_hi[a]))
      throw ValidationError("find_concentration_points: empty search box");
    const double margin = 6.0;
    if (std::max(std::abs(box_lo[a]), std::abs(box_hi[a])) / eps > grid.radius - margin)
      throw ValidationError(
          "find_concentration_points: search box incompatible with the grid at this eps "
          "(box/eps must fit inside the grid with margin)");
  }
  if (multistart < 1) throw ValidationError("find_concentration_points: multistart must be >= 1");

  ConcentrationSearch result;

  // seed lattice in the slow variable, plus critical points of Lambda
  std::vector<Point> seeds;
  const int per_axis = multistart;
  std::vector<int> counter(d, 0);
  for (;;) {
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a)
      x[a] = box_lo[a] + (counter[a] + 0.5) * (box_hi[a] - box_lo[a]) / per_axis;
    seeds.push_back(x);
    int a = 0;
    for (; a < d; ++a) {
      if (++counter[a] < per_axis) break;
      counter[a] = 0;
    }
    if (a == d) break;
  }
  try {
    const AuxiliaryFunction aux(spec);
    ChartSpec chart;
    for (int a = 0; a < d; ++a) {
      chart.lo.push_back(box_lo[a]);
      chart.hi.push_back(box_hi[a]);
      chart.periodic.push_back(0);
      chart.samples.push_back(33);
    }
    const auto lam = [&aux](const std::vector<double>& th) {
      Point x{0.0, 0.0, 0.0};
      for (size_t a = 0; a < th.size(); ++a) x[a] = th[a];
      return aux.value(x);
    };
    for (const auto& cp : abstract_reduce(lam, chart)) {
      Point x{0.0, 0.0, 0.0};
      for (int a = 0; a < d; ++a) x[a] = cp.theta[a];
      seeds.push_back(x);
    }
  } catch (const Error& e) {
    result.warnings.push_back(std::string("lambda warm start skipped: ") + e.what());
  }

  ReductionOptions inner = opts;
  inner.with_coercivity = false;

  struct Candidate {
    Point xi;
    ReducedPoint diag;
  };
  std::vector<Candidate> accepted;

  // initial sweep for the gradient scale and flatness detection
  std::vector<CorrectionResult> first(seeds.size());
  double scale_grad = 0.0, phi_mean = 0.0;
  size_t evaluated = 0;
  for (size_t i = 0; i < seeds.size(); ++i) {
    Point xi{seeds[i][0] / eps, seeds[i][1] / eps, seeds[i][2] / eps};
    try {
      SolveScratch s = prepare(spec, profile, grid, xi, 0.0);
      first[i] = solve_correction_on(s, spec, profile, grid, xi, 0.0, inner, nullptr);
      scale_grad = std::max(scale_grad, grad_norm_d(first[i].diag.reduced_grad, d));
      phi_mean += first[i].diag.phi;
      ++evaluated;
    } catch (const Error& e) {
      result.warnings.push_back(std::string("seed skipped: ") + e.what());
      first[i].diag.grad_norm = -1.0; // mark unusable
    }
  }
  if (evaluated == 0) {
    result.warnings.push_back("no convergent start");
    return result;
  }
  phi_mean /= double(evaluated);

  if (scale_grad <= 1e-8 * std::max(1.0, std::abs(phi_mean))) {
    result.flat_landscape = true;
    result.warnings.push_back("flat reduced landscape: reduced gradient vanishes everywhere");
    return result;
  }
  const double accept_tol = 1e-7 * scale_grad;
  const double dedup_radius = 1e-3 / eps;

  for (size_t i = 0; i < seeds.size(); ++i) {
    if (first[i].diag.grad_norm < 0.0) continue;
    Point xi{seeds[i][0] / eps, seeds[i][1] / eps, seeds[i][2] / eps};
    CorrectionResult cur = first[i];
    GridFunction warm = cur.w;

    bool converged = grad_norm_d(cur.diag.reduced_grad, d) <= accept_tol;
    const double fd = 0.05 / eps;
    for (int it = 0; it < 30 && !converged; ++it) {
      // finite-difference Jacobian of the reduced gradient
      Eigen::MatrixXd J(d, d);
      bool ok = true;
      for (int a = 0; a < d && ok; ++a) {
        Point xp = xi, xm = xi;
        xp[a] += fd;
        xm[a] -= fd;
        try {
          SolveScratch sp = prepare(spec, profile, grid, xp, 0.0);
          const auto rp = solve_correction_on(sp, spec, profile, grid, xp, 0.0, inner, &warm);
          SolveScratch sm = prepare(spec, profile, grid, xm, 0.0);
          const auto rm = solve_correction_on(sm, spec, profile, grid, xm, 0.0, inner, &warm);
          for (int b = 0; b < d; ++b)
            J(b, a) = (rp.diag.reduced_grad[b] - rm.diag.reduced_grad[b]) / (2.0 * fd);
        } catch (const Error&) {
          ok = false;
        }
      }
      if (!ok) break;
      Eigen::VectorXd gv(d);
      for (int b = 0; b < d; ++b) gv[b] = cur.diag.reduced_grad[b];
      Eigen::VectorXd step = J.fullPivLu().solve(-gv);
      if (!step.allFinite()) break;
      const double cap = 0.25 / eps;
      if (step.norm() > cap) step *= cap / step.norm();

      double lambda = 1.0;
      bool improved = false;
      const double g0 = grad_norm_d(cur.diag.reduced_grad, d);
      for (int half = 0; half < 6; ++half) {
        Point xt = xi;
        for (int a = 0; a < d; ++a) xt[a] += lambda * step[a];
        try {
          SolveScratch st = prepare(spec, profile, grid, xt, 0.0);
          const auto rt = solve_correction_on(st, spec, profile, grid, xt, 0.0, inner, &warm);
          if (grad_norm_d(rt.diag.reduced_grad, d) < g0) {
            xi = xt;
            cur = rt;
            warm = cur.w;
            improved = true;
            break;
          }
        } catch (const Error&) {
        }
        lambda *= 0.5;
      }
      if (!improved) break;
      converged = grad_norm_d(cur.diag.reduced_grad, d) <= accept_tol;
    }
    if (!converged) continue;

    bool in_box = true;
    for (int a = 0; a < d; ++a) {
      const double x = eps * xi[a];
      const double slack = 0.05 * (box_hi[a] - box_lo[a]);
      if (x < box_lo[a] - slack || x > box_hi[a] + slack) in_box = false;
    }
    if (!in_box) {
      result.warnings.push_back("converged point escaped the search box, dropped");
      continue;
    }

    bool duplicate = false;
    for (auto& c : accepted) {
      double dist = 0.0;
      for (int a = 0; a < d; ++a) dist += (c.xi[a] - xi[a]) * (c.xi[a] - xi[a]);
      if (std::sqrt(dist) < dedup_radius) {
        duplicate = true;
        // keep the lower Phi, then lexicographic xi
        const bool replace =
            cur.diag.phi < c.diag.phi - 1e-14 ||
            (std::abs(cur.diag.phi - c.diag.phi) <= 1e-14 &&
             std::lexicographical_compare(xi.begin(), xi.begin() + d, c.xi.begin(),
                                          c.xi.begin() + d));
        if (replace) c = {xi, cur.diag};
        break;
      }
    }
    if (!duplicate) accepted.push_back({xi, cur.diag});
  }

  // finalize accepted points with coercivity diagnostics
  for (auto& c : accepted) {
    try {
      ReductionOptions full = opts;
      full.with_coercivity = true;
      SolveScratch s = prepare(spec, profile, grid, c.xi, 0.0);
      const auto r = solve_correction_on(s, spec, profile, grid, c.xi, 0.0, full, nullptr);
      result.points.push_back(r.diag);
    } catch (const Error& e) {
      result.warnings.push_back(std::string("accepted point rejected on re-solve: ") + e.what());
    }
  }
  std::sort(result.points.begin(), result.points.end(), [](const auto& a, const auto& b) {
    return std::lexicographical_compare(a.xi.begin(), a.xi.end(), b.xi.begin(), b.xi.end());
  });
  return result;
}

int morse_index(const ProblemSpec& spec, const RadialProfile& profile, const CartesianGrid& grid,
                const ReducedPoint& point, const ReductionOptions& opts) {
  const int d = spec.n;
  const double eps = spec.epsilon;
  const double fd = 0.05 / eps;
  ReductionOptions inner = opts;
  inner.with_coercivity = false;

  const auto grad_at = [&](const Point& xi) {
    return solve_correction(spec, profile, grid, xi, point.sigma, inner).diag.reduced_grad;
  };

  Eigen::MatrixXd H(d, d);
  for (int a = 0; a < d; ++a) {
    Point xp = point.xi, xm = point.xi;
    xp[a] += fd;
    xm[a] -= fd;
    const auto gp = grad_at(xp), gm = grad_at(xm);
    for (int b = 0; b < d; ++b) H(b, a) = (gp[b] - gm[b]) / (2.0 * fd);
  }
  H = 0.5 * (H + H.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  int neg = 0;
  for (int a = 0; a < d; ++a) {
    if (std::abs(es.eigenvalues()[a]) < 1e-8)
      throw DegenerateError("morse_index: reduced Hessian eigenvalue within 1e-8 of zero");
    if (es.eigenvalues()[a] < 0.0) ++neg;
  }

  // cross-check against the Lambda Hessian sign pattern at eps*xi
  const AuxiliaryFunction aux(spec);
  Point x{eps * point.xi[0], eps * point.xi[1], eps * point.xi[2]};
  const auto lh = aux.hess(x);
  Eigen::MatrixXd LH(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) LH(a, b) = lh[a][b];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> les(LH);
  int lneg = 0;
  for (int a = 0; a < d; ++a)
    if (les.eigenvalues()[a] < 0.0) ++lneg;
  if (lneg != neg)
    throw SolverError("morse_index: sign pattern disagrees with the Lambda Hessian (" +
                      std::to_string(neg) + " vs " + std::to_string(lneg) + ")");
  return neg;
}

CoercivityReport check_coercivity(const ProblemSpec& spec, const RadialProfile& profile,
                                  const CartesianGrid& grid, const Point& xi, double sigma) {
  SolveScratch s = prepare(spec, profile, grid, xi, sigma);
  const SpMat hess = assemble_hessian(s.ctx, s.z);

  CoercivityReport rep;
  {
    const GridFunction lz = s.ctx.hessian_strong(s.z, s.z);
    double num = 0.0;
    const std::int64_t n = grid.node_count();
    for (std::int64_t j = 0; j < n; ++j)
      num += (lz.cval(j) * std::conj(s.z.cval(j))).real();
    num *= s.ctx.hn;
    const double zn = h1_norm(s.z);
    rep.rayleigh_z = num / (zn * zn);
  }
  for (const auto& t : s.basis.vectors) {
    const GridFunction lt = s.ctx.hessian_strong(s.z, t);
    double num = 0.0;
    const std::int64_t n = grid.node_count();
    for (std::int64_t j = 0; j < n; ++j) num += (lt.cval(j) * std::conj(t.cval(j))).real();
    rep.tangent_quotient = std::max(rep.tangent_quotient, std::abs(num * s.ctx.hn));
  }

  std::vector<GridFunction> extended = s.basis.vectors;
  GridFunction zp = s.z;
  project_out(zp, s.basis.vectors);
  const double zn = h1_norm(zp);
  if (zn > 0.0) {
    zp *= 1.0 / zn;
    extended.push_back(std::move(zp));
  }
  rep.coercivity = std::abs(smallest_eigenvalue(s.ctx, hess, extended, grid, s.kind));
  return rep;
}

std::vector<ChartCriticalPoint> abstract_reduce(
    const std::function<double(const std::vector<double>&)>& gamma, const ChartSpec& chart) {
  const int d = static_cast<int>(chart.lo.size());
  if (d < 1 || chart.hi.size() != size_t(d) || chart.samples.size() != size_t(d) ||
      chart.periodic.size() != size_t(d))
    throw ValidationError("abstract_reduce: inconsistent chart spec");
  for (int a = 0; a < d; ++a)
    if (chart.samples[a] < 3 || !(chart.hi[a] > chart.lo[a]))
      throw ValidationError("abstract_reduce: need at least 3 samples per axis");

  std::vector<std::int64_t> strides(d, 1);
  std::int64_t total = 1;
  for (int a = d - 1; a >= 0; --a) {
    strides[a] = total;
    total *= chart.samples[a];
  }
  const auto coords = [&](std::int64_t flat) {
    std::vector<double> th(d);
    for (int a = d - 1; a >= 0; --a) {
      const int i = static_cast<int>((flat / strides[a]) % chart.samples[a]);
      const double span = chart.hi[a] - chart.lo[a];
      th[a] = chart.periodic[a] ? chart.lo[a] + span * i / chart.samples[a]
                                : chart.lo[a] + span * i / (chart.samples[a] - 1);
    }
    return th;
  };

  std::vector<double> values(total);
  double vmax = -1e300, vmin = 1e300;
  for (std::int64_t f = 0; f < total; ++f) {
    values[f] = gamma(coords(f));
    vmax = std::max(vmax, values[f]);
    vmin = std::min(vmin, values[f]);
  }
  const double span_v = vmax - vmin;
  std::vector<ChartCriticalPoint> found;
  if (span_v <= 1e-14 * (1.0 + std::abs(vmax))) return found; // flat

  // strict lattice extrema over the Moore neighborhood
  std::vector<int> idx(d), nb(d);
  for (std::int64_t f = 0; f < total; ++f) {
    for (int a = 0; a < d; ++a) idx[a] = static_cast<int>((f / strides[a]) % chart.samples[a]);
    bool interior_ok = true;
    for (int a = 0; a < d; ++a)
      if (!chart.periodic[a] && (idx[a] == 0 || idx[a] == chart.samples[a] - 1))
        interior_ok = false;
    if (!interior_ok) continue;

    bool is_max = true, is_min = true;
    std::vector<int> off(d, -1);
    for (;;) {
      bool self = true;
      for (int a = 0; a < d; ++a)
        if (off[a] != 0) self = false;
      if (!self) {
        std::int64_t fn = 0;
        bool valid = true;
        for (int a = 0; a < d; ++a) {
          int i2 = idx[a] + off[a];
          if (chart.periodic[a])
            i2 = (i2 + chart.samples[a]) % chart.samples[a];
          else if (i2 < 0 || i2 >= chart.samples[a])
            valid = false;
          nb[a] = i2;
        }
        if (valid) {
          for (int a = 0; a < d; ++a) fn += strides[a] * nb[a];
          if (values[fn] >= values[f]) is_max = false;
          if (values[fn] <= values[f]) is_min = false;
        }
      }
      int a = 0;
      for (; a < d; ++a) {
        if (++off[a] <= 1) break;
        off[a] = -1;
      }
      if (a == d) break;
      if (!is_max && !is_min) break;
    }
    if (!is_max && !is_min) continue;

    // local refinement by damped gradient steps on +/- gamma
    std::vector<double> th = coords(f);
    const double sign = is_max ? 1.0 : -1.0;
    std::vector<double> h(d);
    for (int a = 0; a < d; ++a)
      h[a] = (chart.hi[a] - chart.lo[a]) / (chart.samples[a] - 1);
    double cur = values[f];
    for (int it = 0; it < 200; ++it) {
      std::vector<double> g(d);
      double gn = 0.0;
      for (int a = 0; a < d; ++a) {
        const double fd = 1e-6 * (chart.hi[a] - chart.lo[a]);
        std::vector<double> tp = th, tm = th;
        tp[a] += fd;
        tm[a] -= fd;
        g[a] = (gamma(tp) - gamma(tm)) / (2.0 * fd);
        gn += g[a] * g[a];
      }
      gn = std::sqrt(gn);
      if (gn < 1e-12 * (1.0 + std::abs(cur))) break;
      double step = std::min(h[0], 1.0) * 0.5;
      bool improved = false;
      for (int half = 0; half < 40; ++half) {
        std::vector<double> tt = th;
        for (int a = 0; a < d; ++a) {
          tt[a] += sign * step * g[a] / gn;
          if (chart.periodic[a]) {
            const double span = chart.hi[a] - chart.lo[a];
            while (tt[a] >= chart.hi[a]) tt[a] -= span;
            while (tt[a] < chart.lo[a]) tt[a] += span;
          } else {
            tt[a] = std::clamp(tt[a], chart.lo[a], chart.hi[a]);
          }
        }
        const double v = gamma(tt);
        if (sign * (v - cur) > 0.0) {
          th = tt;
          cur = v;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved) break;
    }

    bool dup = false;
    for (const auto& c : found) {
      double dist = 0.0;
      for (int a = 0; a < d; ++a) {
        double delta = std::abs(c.theta[a] - th[a]);
        if (chart.periodic[a]) {
          const double span = chart.hi[a] - chart.lo[a];
          delta = std::min(delta, span - delta);
        }
        dist += delta * delta;
      }
      if (std::sqrt(dist) < 1e-4 * (chart.hi[0] - chart.lo[0])) {
        dup = true;
        break;
      }
    }
    if (!dup) found.push_back({th, cur, is_max});
  }

  std::sort(found.begin(), found.end(),
            [](const auto& a, const auto& b) { return a.theta < b.theta; });
  return found;
}

} // namespace concentra
