#include "concentra/energy.hpp"

#include <cmath>

#include "concentra/linalg.hpp"
#include "energy_context.hpp"

namespace concentra {
namespace detail {

EnergyContext EnergyContext::assemble(const ProblemSpec& spec, const CartesianGrid& grid,
                                      FieldKind kind, const EvalOptions& opts) {
  if (spec.has_magnetic() && kind != FieldKind::complex_)
    throw ValidationError("energy: magnetic problems need a complex field");
  EnergyContext ctx;
  ctx.grid = grid;
  ctx.kind = kind;
  ctx.p = spec.p;
  ctx.hn = 1.0;
  for (int a = 0; a < grid.dim; ++a) ctx.hn *= grid.spacing;
  ctx.magnetic = spec.has_magnetic();

  const std::int64_t n = grid.node_count();
  ctx.Vc.resize(n);
  ctx.Kc.resize(n);
  if (ctx.magnetic)
    for (int a = 0; a < grid.dim; ++a) ctx.Ac[a].resize(n);

  if (opts.frozen) {
    const Point exi{spec.epsilon * opts.xi[0], spec.epsilon * opts.xi[1],
                    spec.epsilon * opts.xi[2]};
    const double v = spec.V_at(exi), k = spec.K_at(exi);
    const Point a_val = spec.A_at(exi);
    for (std::int64_t j = 0; j < n; ++j) {
      ctx.Vc[j] = v;
      ctx.Kc[j] = k;
    }
    if (ctx.magnetic)
      for (int a = 0; a < grid.dim; ++a)
        for (std::int64_t j = 0; j < n; ++j) ctx.Ac[a][j] = a_val[a];
  } else {
    for (std::int64_t j = 0; j < n; ++j) {
      const Point x = grid.coord(j);
      const Point ex{spec.epsilon * x[0], spec.epsilon * x[1], spec.epsilon * x[2]};
      ctx.Vc[j] = spec.V_at(ex);
      ctx.Kc[j] = spec.K_at(ex);
      if (ctx.magnetic) {
        const Point av = spec.A_at(ex);
        for (int a = 0; a < grid.dim; ++a) ctx.Ac[a][j] = av[a];
      }
    }
  }
  return ctx;
}

void derivative_transpose(const CartesianGrid& g, const std::vector<double>& y, int axis,
                          std::vector<double>& out) {
  const int M = g.points_per_axis;
  const std::int64_t s = g.stride(axis);
  const double invh = 1.0 / g.spacing, inv2h = 0.5 / g.spacing;
  const std::int64_t n = g.node_count();
  out.assign(n, 0.0);
  int idx[3];
  for (std::int64_t j = 0; j < n; ++j) {
    g.decompose(j, idx);
    const int i = idx[axis];
    double acc = 0.0;
    if (i == 0) {
      acc = -y[j] * invh - (M > 2 ? y[j + s] * inv2h : y[j + s] * invh);
    } else if (i == 1) {
      acc = y[j - s] * invh;
      if (i + 1 <= M - 2) acc -= y[j + s] * inv2h;
      if (i == M - 2) acc -= y[j + s] * invh; // M == 3 corner case
    } else if (i == M - 1) {
      acc = y[j] * invh;
      if (i - 1 >= 1) acc += y[j - s] * inv2h;
    } else if (i == M - 2) {
      acc = -y[j + s] * invh;
      if (i - 1 >= 1) acc += y[j - s] * inv2h;
    } else {
      acc = (y[j - s] - y[j + s]) * inv2h;
    }
    out[j] = acc;
  }
}

void EnergyContext::covariant(const GridFunction& u, int axis, std::vector<double>& out_re,
                              std::vector<double>& out_im) const {
  // s = -i D u - A u  on complex samples
  const GridFunction du = derivative(u, axis);
  const std::int64_t n = grid.node_count();
  out_re.resize(n);
  out_im.resize(n);
  const bool has_a = magnetic && !Ac[axis].empty();
  for (std::int64_t j = 0; j < n; ++j) {
    const std::complex<double> d = du.cval(j);
    const std::complex<double> uv = u.cval(j);
    const double a = has_a ? Ac[axis][j] : 0.0;
    const std::complex<double> s = std::complex<double>(0.0, -1.0) * d - a * uv;
    out_re[j] = s.real();
    out_im[j] = s.imag();
  }
}

double EnergyContext::value(const GridFunction& u) const {
  double kin, pot, nl;
  split(u, kin, pot, nl);
  return kin + pot - nl;
}

void EnergyContext::split(const GridFunction& u, double& kin, double& pot, double& nl) const {
  const std::int64_t n = grid.node_count();
  kin = pot = nl = 0.0;
  if (kind == FieldKind::real) {
    const GridFunction lap = laplacian_apply(u);
    for (std::int64_t j = 0; j < n; ++j) kin += -lap[j] * u[j];
  } else {
    std::vector<double> sre, sim;
    for (int a = 0; a < grid.dim; ++a) {
      covariant(u, a, sre, sim);
      for (std::int64_t j = 0; j < n; ++j) kin += sre[j] * sre[j] + sim[j] * sim[j];
    }
  }
  for (std::int64_t j = 0; j < n; ++j) {
    const double m2 = std::norm(u.cval(j));
    pot += (1.0 + Vc[j]) * m2;
    nl += Kc[j] * std::pow(std::sqrt(m2), p + 1.0);
  }
  kin *= 0.5 * hn;
  pot *= 0.5 * hn;
  nl *= hn / (p + 1.0);
}

double EnergyContext::quadratic_form(const GridFunction& u) const {
  double kin, pot, nl;
  split(u, kin, pot, nl);
  return 2.0 * (kin + pot);
}

void EnergyContext::add_kinetic_gradient(const GridFunction& u, GridFunction& acc) const {
  const std::int64_t n = grid.node_count();
  if (kind == FieldKind::real) {
    const GridFunction lap = laplacian_apply(u);
    for (std::int64_t j = 0; j < n; ++j) acc[j] -= lap[j];
    return;
  }
  // G_kin = sum_a [ i D_a^T s_a - A_a s_a ]
  std::vector<double> sre, sim, tre, tim;
  for (int a = 0; a < grid.dim; ++a) {
    covariant(u, a, sre, sim);
    derivative_transpose(grid, sre, a, tre);
    derivative_transpose(grid, sim, a, tim);
    const bool has_a = magnetic && !Ac[a].empty();
    for (std::int64_t j = 0; j < n; ++j) {
      // i * (tre + i tim) = -tim + i tre
      double gre = -tim[j];
      double gim = tre[j];
      if (has_a) {
        gre -= Ac[a][j] * sre[j];
        gim -= Ac[a][j] * sim[j];
      }
      acc.raw()[2 * j] += gre;
      acc.raw()[2 * j + 1] += gim;
    }
  }
}

GridFunction EnergyContext::strong_gradient(const GridFunction& u) const {
  GridFunction out(grid, kind);
  add_kinetic_gradient(u, out);
  const std::int64_t n = grid.node_count();
  for (std::int64_t j = 0; j < n; ++j) {
    const std::complex<double> uv = u.cval(j);
    const double mod = std::abs(uv);
    const double nlc = Kc[j] * (mod > 0.0 ? std::pow(mod, p - 1.0) : 0.0);
    out.set_cval(j, out.cval(j) + (1.0 + Vc[j] - nlc) * uv);
  }
  return out;
}

GridFunction EnergyContext::hessian_strong(const GridFunction& u, const GridFunction& v) const {
  GridFunction out(grid, kind);
  add_kinetic_gradient(v, out);
  const std::int64_t n = grid.node_count();
  if (kind == FieldKind::real) {
    for (std::int64_t j = 0; j < n; ++j) {
      const double mod = std::abs(u[j]);
      const double nlc = Kc[j] * p * (mod > 0.0 ? std::pow(mod, p - 1.0) : 0.0);
      out[j] += (1.0 + Vc[j] - nlc) * v[j];
    }
  } else {
    for (std::int64_t j = 0; j < n; ++j) {
      const std::complex<double> uv = u.cval(j), vv = v.cval(j);
      const double mod = std::abs(uv);
      std::complex<double> t = (1.0 + Vc[j]) * vv;
      if (mod > 0.0) {
        const double m1 = std::pow(mod, p - 1.0);
        const double m3 = m1 / (mod * mod);
        t -= Kc[j] * (m1 * vv + (p - 1.0) * m3 * (uv.real() * vv.real() + uv.imag() * vv.imag()) * uv);
      }
      out.set_cval(j, out.cval(j) + t);
    }
  }
  return out;
}

GridFunction EnergyContext::riesz(const GridFunction& s, double rtol) const {
  GridFunction g(grid, kind);
  const std::int64_t n = grid.node_count();
  const int comps = (kind == FieldKind::complex_) ? 2 : 1;

  if (grid.dim == 1) {
    // (-d2/dx2 + 1) is tridiagonal; direct solve per component
    const double invh2 = 1.0 / (grid.spacing * grid.spacing);
    for (int c = 0; c < comps; ++c) {
      std::vector<double> lo(n, -invh2), di(n, 1.0 + 2.0 * invh2), up(n, -invh2), rhs(n);
      for (std::int64_t j = 0; j < n; ++j) rhs[j] = s.raw()[comps * j + c];
      solve_tridiagonal(lo, di, up, rhs);
      for (std::int64_t j = 0; j < n; ++j) g.raw()[comps * j + c] = rhs[j];
    }
    return g;
  }

  GridFunction tmp_in(grid, FieldKind::real), tmp_lap(grid, FieldKind::real);
  const auto apply = [&](const std::vector<double>& x, std::vector<double>& out) {
    for (std::int64_t j = 0; j < n; ++j) tmp_in[j] = x[j];
    tmp_lap = laplacian_apply(tmp_in);
    out.resize(n);
    for (std::int64_t j = 0; j < n; ++j) out[j] = x[j] - tmp_lap[j];
  };
  for (int c = 0; c < comps; ++c) {
    std::vector<double> b(n), x(n, 0.0);
    for (std::int64_t j = 0; j < n; ++j) b[j] = s.raw()[comps * j + c];
    conjugate_gradient(apply, b, x, rtol, 20000);
    for (std::int64_t j = 0; j < n; ++j) g.raw()[comps * j + c] = x[j];
  }
  return g;
}

double EnergyContext::grad_norm(const GridFunction& u) const {
  const GridFunction s = strong_gradient(u);
  const GridFunction g = riesz(s, 1e-10);
  const std::int64_t n = grid.node_count();
  double acc = 0.0;
  for (std::int64_t j = 0; j < n; ++j) acc += (s.cval(j) * std::conj(g.cval(j))).real();
  return std::sqrt(std::max(0.0, hn * acc));
}

} // namespace detail

namespace {

void check_input(const GridFunction& u, const ProblemSpec& spec) {
  if (u.grid().dim != spec.n) throw ValidationError("energy: grid dimension != problem.n");
  if (spec.has_magnetic() && !u.is_complex())
    throw ValidationError("energy: field kind mismatch, A != 0 needs a complex field");
  if (!u.all_finite()) throw ValidationError("energy: field has non-finite entries");
}

} // namespace

EnergyReport energy(const GridFunction& u, const ProblemSpec& spec, const EvalOptions& opts) {
  check_input(u, spec);
  const auto ctx = detail::EnergyContext::assemble(spec, u.grid(), u.kind(), opts);
  EnergyReport rep;
  ctx.split(u, rep.kinetic, rep.potential, rep.nonlinear);
  rep.value = rep.kinetic + rep.potential - rep.nonlinear;
  rep.grad_norm = ctx.grad_norm(u);
  return rep;
}

GridFunction gradient(const GridFunction& u, const ProblemSpec& spec, const EvalOptions& opts) {
  check_input(u, spec);
  const auto ctx = detail::EnergyContext::assemble(spec, u.grid(), u.kind(), opts);
  return ctx.riesz(ctx.strong_gradient(u), 1e-10);
}

GridFunction hessian_apply(const GridFunction& u, const GridFunction& v, const ProblemSpec& spec,
                           const EvalOptions& opts) {
  check_input(u, spec);
  if (u.kind() != v.kind() || !u.grid().same_layout(v.grid()))
    throw ValidationError("hessian_apply: u and v must share grid and field kind");
  const auto ctx = detail::EnergyContext::assemble(spec, u.grid(), u.kind(), opts);
  return ctx.riesz(ctx.hessian_strong(u, v), 1e-10);
}

double nehari_scale(const GridFunction& u, const ProblemSpec& spec, const EvalOptions& opts) {
  check_input(u, spec);
  const auto ctx = detail::EnergyContext::assemble(spec, u.grid(), u.kind(), opts);
  double kin, pot, nl;
  ctx.split(u, kin, pot, nl);
  const double q = 2.0 * (kin + pot);
  const double nn = (spec.p + 1.0) * nl;
  if (!(nn > 0.0))
    throw DegenerateError("nehari_scale: int K |u|^(p+1) vanishes");
  return std::pow(q / nn, 1.0 / (spec.p - 1.0));
}

double pohozaev_residual(const GridFunction& u, double ball_radius, double p, double lambda) {
  const CartesianGrid& g = u.grid();
  if (u.is_complex()) throw ValidationError("pohozaev_residual: real fields only");
  if (!(ball_radius > 0.0) || ball_radius > g.radius)
    throw ValidationError("pohozaev_residual: ball not contained in the grid");
  const int n = g.dim;
  const std::int64_t nn = g.node_count();
  const double r2cap = ball_radius * ball_radius;

  const auto inside = [&](std::int64_t j) {
    const Point x = g.coord(j);
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
    return r2 <= r2cap;
  };

  double hn = 1.0;
  for (int a = 0; a < n; ++a) hn *= g.spacing;

  // volume terms: n int P(u) + (2-n)/2 int u p(u),  p(u) = |u|^(p-1)u + lambda u
  double vol_P = 0.0, vol_up = 0.0;
  for (std::int64_t j = 0; j < nn; ++j) {
    if (!inside(j)) continue;
    const double uj = u[j];
    const double am = std::abs(uj);
    vol_P += std::pow(am, p + 1.0) / (p + 1.0) + 0.5 * lambda * uj * uj;
    vol_up += std::pow(am, p - 1.0) * uj * uj + lambda * uj * uj;
  }
  vol_P *= hn;
  vol_up *= hn;
  const double lhs = n * vol_P + 0.5 * (2.0 - n) * vol_up;

  // Boundary term over the grid faces separating inside from outside nodes.
  // Per face: one-sided normal difference u_j / (radial gap), sphere cut
  // point for the x.nu factor, and the projected face measure |nu_a| dA
  // (faces of each axis family sample the sphere with density |nu_a|).
  const double hface = hn / g.spacing;
  double rhs = 0.0;
  int idx[3];
  for (std::int64_t j = 0; j < nn; ++j) {
    if (!inside(j)) continue;
    g.decompose(j, idx);
    const Point x = g.coord(j);
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
    const double gap = std::max(ball_radius - std::sqrt(r2), 1e-12);
    const double du = u[j] / gap;
    for (int a = 0; a < n; ++a) {
      const std::int64_t s = g.stride(a);
      for (int dir = -1; dir <= 1; dir += 2) {
        const int i2 = idx[a] + dir;
        const bool nb_inside =
            i2 >= 0 && i2 < g.points_per_axis && inside(j + dir * s);
        if (nb_inside) continue;
        // cut of the sphere along this direction: t^2 + 2 dir x_a t + (r^2 - a^2) = 0
        const double t =
            -dir * x[a] + std::sqrt(std::max(x[a] * x[a] + r2cap - r2, 0.0));
        const double cut_a = std::abs(x[a] + dir * t);
        rhs += hface * cut_a * du * du;
      }
    }
  }
  rhs *= 0.5;
  return std::abs(lhs - rhs);
}

} // namespace concentra
