#include "concentra/grid.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <string>

namespace concentra {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::resource: return "resource";
    case ErrorKind::domain: return "domain";
    case ErrorKind::placement: return "placement";
    case ErrorKind::solver: return "solver";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::refinement: return "refinement";
  }
  return "unknown";
}

Point make_point(double x, double y, double z) { return Point{x, y, z}; }

std::int64_t CartesianGrid::node_count() const {
  std::int64_t n = 1;
  for (int a = 0; a < dim; ++a) n *= points_per_axis;
  return n;
}

std::int64_t CartesianGrid::stride(int axis) const {
  std::int64_t s = 1;
  for (int a = axis + 1; a < dim; ++a) s *= points_per_axis;
  return s;
}

void CartesianGrid::decompose(std::int64_t flat, int* idx) const {
  for (int a = dim - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % points_per_axis);
    flat /= points_per_axis;
  }
}

Point CartesianGrid::coord(std::int64_t flat) const {
  int idx[3] = {0, 0, 0};
  decompose(flat, idx);
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) p[a] = axis_coord(idx[a]);
  return p;
}

bool CartesianGrid::same_layout(const CartesianGrid& other) const {
  return dim == other.dim && points_per_axis == other.points_per_axis &&
         std::abs(radius - other.radius) < 1e-14 * (1.0 + std::abs(radius));
}

namespace {
std::atomic<std::int64_t> g_node_cap{std::int64_t(1) << 27};
}

std::int64_t grid_node_cap() { return g_node_cap.load(); }
void set_grid_node_cap(std::int64_t cap) { g_node_cap.store(cap); }

CartesianGrid make_grid(int dim, double radius, int points_per_axis) {
  if (dim < 1 || dim > 3)
    throw ValidationError("make_grid: dim must be 1, 2 or 3, got " + std::to_string(dim));
  if (!(radius > 0.0)) throw ValidationError("make_grid: radius must be positive");
  if (points_per_axis < 3)
    throw ValidationError("make_grid: points_per_axis must be >= 3, got " +
                          std::to_string(points_per_axis));
  if (points_per_axis % 2 == 0)
    throw ValidationError("make_grid: points_per_axis must be odd so the origin is a node, got " +
                          std::to_string(points_per_axis));
  std::int64_t n = 1;
  for (int a = 0; a < dim; ++a) n *= points_per_axis;
  if (n > grid_node_cap())
    throw ResourceError("make_grid: node count " + std::to_string(n) + " exceeds cap " +
                        std::to_string(grid_node_cap()));
  CartesianGrid g;
  g.dim = dim;
  g.radius = radius;
  g.points_per_axis = points_per_axis;
  g.spacing = 2.0 * radius / (points_per_axis - 1);
  return g;
}

GridFunction::GridFunction(const CartesianGrid& grid, FieldKind kind)
    : grid_(grid), kind_(kind), n_(grid.node_count()) {
  values_.assign(kind == FieldKind::complex_ ? 2 * n_ : n_, 0.0);
}

bool GridFunction::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  if (values_.size() != other.values_.size())
    throw ValidationError("GridFunction +=: size mismatch");
  for (size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  if (values_.size() != other.values_.size())
    throw ValidationError("GridFunction -=: size mismatch");
  for (size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

GridFunction& GridFunction::operator*=(double c) {
  for (double& v : values_) v *= c;
  return *this;
}

GridFunction GridFunction::sample(const CartesianGrid& grid,
                                  const std::function<double(const Point&)>& f) {
  GridFunction out(grid, FieldKind::real);
  const std::int64_t n = grid.node_count();
  for (std::int64_t j = 0; j < n; ++j) out[j] = f(grid.coord(j));
  return out;
}

GridFunction GridFunction::sample_complex(
    const CartesianGrid& grid, const std::function<std::complex<double>(const Point&)>& f) {
  GridFunction out(grid, FieldKind::complex_);
  const std::int64_t n = grid.node_count();
  for (std::int64_t j = 0; j < n; ++j) out.set_cval(j, f(grid.coord(j)));
  return out;
}

NormKind NormKind::lp(double p) {
  if (!(p > 1.0)) throw ValidationError("NormKind::lp: p must be > 1");
  return {Lp, p};
}

double quad_weight(const CartesianGrid& grid, std::int64_t flat) {
  int idx[3];
  grid.decompose(flat, idx);
  double w = 1.0;
  for (int a = 0; a < grid.dim; ++a) {
    w *= grid.spacing;
    if (idx[a] == 0 || idx[a] == grid.points_per_axis - 1) w *= 0.5;
  }
  return w;
}

double integrate(const GridFunction& f) { return integrate_complex(f).real(); }

std::complex<double> integrate_complex(const GridFunction& f) {
  const CartesianGrid& g = f.grid();
  const std::int64_t n = f.size();
  if (f.is_complex()) {
    std::complex<double> acc{0.0, 0.0};
    for (std::int64_t j = 0; j < n; ++j) acc += quad_weight(g, j) * f.cval(j);
    return acc;
  }
  double acc = 0.0;
  for (std::int64_t j = 0; j < n; ++j) acc += quad_weight(g, j) * f[j];
  return {acc, 0.0};
}

double integrate_product(const GridFunction& f, const GridFunction& g) {
  if (!f.grid().same_layout(g.grid()))
    throw ValidationError("integrate_product: grids differ");
  const std::int64_t n = f.size();
  double acc = 0.0;
  if (!f.is_complex() && !g.is_complex()) {
    for (std::int64_t j = 0; j < n; ++j) acc += quad_weight(f.grid(), j) * f[j] * g[j];
  } else {
    // real part of the Hermitian pairing
    for (std::int64_t j = 0; j < n; ++j)
      acc += quad_weight(f.grid(), j) * (f.cval(j) * std::conj(g.cval(j))).real();
  }
  return acc;
}

GridFunction derivative(const GridFunction& f, int axis) {
  const CartesianGrid& g = f.grid();
  if (axis < 0 || axis >= g.dim) throw ValidationError("derivative: axis out of range");
  GridFunction out(g, f.kind());
  const int M = g.points_per_axis;
  const std::int64_t s = g.stride(axis);
  const double inv2h = 1.0 / (2.0 * g.spacing);
  const double invh = 1.0 / g.spacing;
  const std::int64_t n = g.node_count();
  int idx[3];
  const int comps = f.is_complex() ? 2 : 1;
  for (std::int64_t j = 0; j < n; ++j) {
    g.decompose(j, idx);
    const int i = idx[axis];
    for (int c = 0; c < comps; ++c) {
      const auto at = [&](std::int64_t k) { return f.raw()[comps * k + c]; };
      double d;
      if (i == 0)
        d = (at(j + s) - at(j)) * invh;
      else if (i == M - 1)
        d = (at(j) - at(j - s)) * invh;
      else
        d = (at(j + s) - at(j - s)) * inv2h;
      out.raw()[comps * j + c] = d;
    }
  }
  return out;
}

GridFunction laplacian_apply(const GridFunction& f) {
  const CartesianGrid& g = f.grid();
  GridFunction out(g, f.kind());
  const int M = g.points_per_axis;
  const double invh2 = 1.0 / (g.spacing * g.spacing);
  const std::int64_t n = g.node_count();
  const int comps = f.is_complex() ? 2 : 1;
  int idx[3];
  for (std::int64_t j = 0; j < n; ++j) {
    g.decompose(j, idx);
    for (int c = 0; c < comps; ++c) {
      const auto at = [&](std::int64_t k) { return f.raw()[comps * k + c]; };
      double acc = 0.0;
      for (int a = 0; a < g.dim; ++a) {
        const std::int64_t s = g.stride(a);
        const double left = idx[a] > 0 ? at(j - s) : 0.0;      // Dirichlet exterior
        const double right = idx[a] < M - 1 ? at(j + s) : 0.0;
        acc += (left - 2.0 * at(j) + right) * invh2;
      }
      out.raw()[comps * j + c] = acc;
    }
  }
  return out;
}

double norm(const GridFunction& f, NormKind kind) {
  const std::int64_t n = f.size();
  switch (kind.tag) {
    case NormKind::Linf: {
      double m = 0.0;
      for (std::int64_t j = 0; j < n; ++j) m = std::max(m, f.abs_at(j));
      return m;
    }
    case NormKind::L2: {
      double acc = 0.0;
      for (std::int64_t j = 0; j < n; ++j) {
        const double a = f.abs_at(j);
        acc += quad_weight(f.grid(), j) * a * a;
      }
      return std::sqrt(acc);
    }
    case NormKind::Lp: {
      double acc = 0.0;
      for (std::int64_t j = 0; j < n; ++j)
        acc += quad_weight(f.grid(), j) * std::pow(f.abs_at(j), kind.p);
      return std::pow(acc, 1.0 / kind.p);
    }
    case NormKind::H1: {
      double acc = 0.0;
      const double l2 = norm(f, NormKind::l2());
      acc += l2 * l2;
      for (int a = 0; a < f.grid().dim; ++a) {
        const double d = norm(derivative(f, a), NormKind::l2());
        acc += d * d;
      }
      return std::sqrt(acc);
    }
  }
  return 0.0;
}

double h1_inner(const GridFunction& f, const GridFunction& g) {
  if (!f.grid().same_layout(g.grid())) throw ValidationError("h1_inner: grids differ");
  if (f.kind() != g.kind()) throw ValidationError("h1_inner: field kinds differ");
  const CartesianGrid& gr = f.grid();
  double hn = 1.0;
  for (int a = 0; a < gr.dim; ++a) hn *= gr.spacing;

  const GridFunction lap = laplacian_apply(f);
  const std::int64_t n = f.size();
  double acc = 0.0;
  if (!f.is_complex()) {
    for (std::int64_t j = 0; j < n; ++j) acc += (f[j] - lap[j]) * g[j];
  } else {
    for (std::int64_t j = 0; j < n; ++j)
      acc += ((f.cval(j) - lap.cval(j)) * std::conj(g.cval(j))).real();
  }
  return hn * acc;
}

double h1_norm(const GridFunction& f) { return std::sqrt(std::max(0.0, h1_inner(f, f))); }

} // namespace concentra
