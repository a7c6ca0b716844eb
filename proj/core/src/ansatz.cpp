#include "concentra/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace concentra {

double ProblemSpec::p_max() const {
  return n >= 3 ? double(n + 2) / double(n - 2) : std::numeric_limits<double>::infinity();
}

void ProblemSpec::validate(const CartesianGrid* grid) const {
  if (n < 1 || n > 3) throw ValidationError("problem.n: must be 1, 2 or 3");
  if (!(p > 1.0)) throw ValidationError("problem.p: exponent must exceed 1");
  if (n >= 3 && !(p < p_max()))
    throw ValidationError("problem.p: exponent must be subcritical, p < (n+2)/(n-2)");
  if (!(epsilon > 0.0)) throw ValidationError("problem.epsilon: must be positive");
  if (grid) {
    if (grid->dim != n) throw ValidationError("problem.n: does not match grid dimension");
    const std::int64_t nn = grid->node_count();
    for (std::int64_t j = 0; j < nn; ++j) {
      Point x = grid->coord(j);
      Point ex{epsilon * x[0], epsilon * x[1], epsilon * x[2]};
      if (!(1.0 + V_at(ex) > 0.0))
        throw ValidationError("problem.V: 1+V(eps x) not positive at a sampled node");
      if (!(K_at(ex) > 0.0))
        throw ValidationError("problem.K: K(eps x) not positive at a sampled node");
    }
  }
}

namespace {

// Fritsch-Carlson monotone cubic slopes for decreasing data.
std::vector<double> monotone_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  std::vector<double> d(n - 1), m(n);
  for (size_t i = 0; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
  m[0] = d[0];
  m[n - 1] = d[n - 2];
  for (size_t i = 1; i + 1 < n; ++i)
    m[i] = (d[i - 1] * d[i] <= 0.0) ? 0.0 : 0.5 * (d[i - 1] + d[i]);
  for (size_t i = 0; i + 1 < n; ++i) {
    if (d[i] == 0.0) {
      m[i] = m[i + 1] = 0.0;
      continue;
    }
    const double a = m[i] / d[i], b = m[i + 1] / d[i];
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double t = 3.0 / std::sqrt(s);
      m[i] = t * a * d[i];
      m[i + 1] = t * b * d[i];
    }
  }
  return m;
}

struct ShootState {
  double u, v; // U, U'
};

// RHS away from r = 0.
inline ShootState rhs(int n, double p, double r, const ShootState& s) {
  const double up = std::pow(std::abs(s.u), p - 1.0) * s.u;
  return {s.v, s.u - up - (n - 1) * s.v / r};
}

enum class ShotKind { overshoot, undershoot };

inline void rk4_step(int n, double p, double& r, ShootState& s, double h) {
  const ShootState k1 = rhs(n, p, r, s);
  const ShootState s2{s.u + 0.5 * h * k1.u, s.v + 0.5 * h * k1.v};
  const ShootState k2 = rhs(n, p, r + 0.5 * h, s2);
  const ShootState s3{s.u + 0.5 * h * k2.u, s.v + 0.5 * h * k2.v};
  const ShootState k3 = rhs(n, p, r + 0.5 * h, s3);
  const ShootState s4{s.u + h * k3.u, s.v + h * k3.v};
  const ShootState k4 = rhs(n, p, r + h, s4);
  s.u += h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
  s.v += h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
  r += h;
}

// Integrates from the series start and classifies the trajectory; the
// classification horizon extends past r_max so that the bisection keeps
// discriminating even when the profile window is short.  When `store` is
// non-null the U samples at the `steps`+1 nodes of [0, r_max] are recorded.
ShotKind shoot(int n, double p, double a, double r_max, const ShootingOptions& opts,
               std::vector<ShootState>* store) {
  const double hf = r_max / opts.steps / opts.substeps;
  // regular series start at r = hf: U = a + c2 r^2 + c4 r^4 + c6 r^6
  const double g = a - std::pow(a, p);
  const double gp = 1.0 - p * std::pow(a, p - 1.0);
  const double gpp = -p * (p - 1.0) * std::pow(a, p - 2.0);
  const double c2 = g / (2.0 * n);
  const double c4 = gp * c2 / (4.0 * n + 8.0);
  const double c6 = (gp * c4 + 0.5 * gpp * c2 * c2) / (6.0 * n + 24.0);
  ShootState s{a + c2 * hf * hf + c4 * std::pow(hf, 4.0) + c6 * std::pow(hf, 6.0),
               2.0 * c2 * hf + 4.0 * c4 * hf * hf * hf + 6.0 * c6 * std::pow(hf, 5.0)};
  if (store) {
    store->clear();
    store->reserve(opts.steps + 1);
    store->push_back({a, 0.0});
  }
  double r = hf;
  const long fine_total =
      static_cast<long>(opts.steps) * opts.substeps +
      static_cast<long>(opts.class_extra / hf);
  for (long i = 1; i <= fine_total; ++i) {
    if (store && i % opts.substeps == 0 &&
        i <= static_cast<long>(opts.steps) * opts.substeps)
      store->push_back(s);
    if (s.u <= 0.0) return ShotKind::overshoot;
    if (s.v > 0.0) return ShotKind::undershoot;
    rk4_step(n, p, r, s, hf);
  }
  return ShotKind::undershoot; // still positive and decreasing: below the homoclinic
}

// Pure decaying solution of the linearized tail equation U'' + (n-1)/r U' = U,
// and its derivative (used only to seed the backward tail integration).
double tail_kernel(int n, double r) {
  switch (n) {
    case 1: return std::exp(-r);
    case 2: return std::cyl_bessel_k(0.0, r);
    default: return std::exp(-r) / r;
  }
}
double tail_kernel_deriv(int n, double r) {
  switch (n) {
    case 1: return -std::exp(-r);
    case 2: return -std::cyl_bessel_k(1.0, r);
    default: return -std::exp(-r) * (1.0 / r + 1.0 / (r * r));
  }
}

} // namespace

RadialProfile solve_ground_state(int n, double p, double tol, double r_max,
                                 const ShootingOptions& opts) {
  if (n < 1 || n > 3) throw ValidationError("solve_ground_state: n must be 1, 2 or 3");
  if (!(p > 1.0)) throw ValidationError("solve_ground_state: p must exceed 1");
  if (n >= 3 && !(p < double(n + 2) / double(n - 2)))
    throw ValidationError("solve_ground_state: p must be subcritical");
  if (!(tol > 1e-12 && tol < 1e-3))
    throw ValidationError("solve_ground_state: tol must lie in (1e-12, 1e-3)");
  if (!(r_max > 4.0)) throw ValidationError("solve_ground_state: r_max too small");

  double lo = 1.0 + 1e-9, hi = opts.upper_bracket;
  if (shoot(n, p, lo, r_max, opts, nullptr) != ShotKind::undershoot ||
      shoot(n, p, hi, r_max, opts, nullptr) != ShotKind::overshoot) {
    std::ostringstream os;
    os << "solve_ground_state: no sign change over bracket [" << lo << ", " << hi
       << "] (n=" << n << ", p=" << p << ")";
    throw SolverError(os.str());
  }
  for (int i = 0; i < opts.bisection_depth; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (shoot(n, p, mid, r_max, opts, nullptr) == ShotKind::overshoot)
      hi = mid;
    else
      lo = mid;
  }
  const double a = 0.5 * (lo + hi);

  std::vector<ShootState> samples;
  shoot(n, p, a, r_max, opts, &samples);
  const double h = r_max / opts.steps;
  const int total = opts.steps + 1;

  RadialProfile prof;
  prof.n = n;
  prof.p = p;
  prof.peak = a;
  prof.radii.resize(total);
  prof.values.assign(total, 0.0);
  for (int i = 0; i < total; ++i) prof.radii[i] = i * h;

  // The forward integration eventually diverges along the unstable mode;
  // past the point where U drops to 1e-4 of the peak the samples are
  // replaced by a backward integration of the full equation, seeded on the
  // decaying asymptote well outside the window (backward integration tracks
  // the decaying orbit stably) and matched to the forward value.
  const double switch_frac = 1e-4;
  int i_switch = total;
  for (int i = 0; i < int(samples.size()); ++i) {
    prof.values[i] = samples[i].u;
    if (samples[i].u < switch_frac * a && i_switch == total) i_switch = i;
  }
  if (i_switch < total) {
    const double hf = h / opts.substeps;
    const long fine_extra = static_cast<long>(std::ceil(6.0 / hf));
    const long node_offset = static_cast<long>(opts.steps) * opts.substeps + fine_extra;
    const double r_start = node_offset * hf; // lands exactly on the node lattice
    const double c0 = samples[i_switch].u / tail_kernel(n, prof.radii[i_switch]);
    ShootState s{c0 * tail_kernel(n, r_start), c0 * tail_kernel_deriv(n, r_start)};
    double r = r_start;
    std::vector<double> back(total, 0.0);
    const long fine_back = node_offset - static_cast<long>(i_switch) * opts.substeps;
    for (long i = 0; i <= fine_back; ++i) {
      const long fine_index = node_offset - i;
      if (fine_index % opts.substeps == 0) {
        const long node = fine_index / opts.substeps;
        if (node >= i_switch && node < total) back[node] = s.u;
      }
      if (i < fine_back) rk4_step(n, p, r, s, -hf);
    }
    const double scale = samples[i_switch].u / back[i_switch];
    for (int i = i_switch; i < total; ++i) prof.values[i] = scale * back[i];
  }

  for (int i = 0; i < total; ++i)
    if (!(prof.values[i] > 0.0) || (i > 0 && prof.values[i] >= prof.values[i - 1]))
      throw ConvergenceError("solve_ground_state: profile not positive decreasing at node " +
                             std::to_string(i));

  // 6th-order residual check on the stored nodes
  double res_max = 0.0;
  for (int i = 3; i < total - 3; ++i) {
    const double r = prof.radii[i];
    const auto& u = prof.values;
    const double d1 = (-u[i - 3] + 9.0 * u[i - 2] - 45.0 * u[i - 1] + 45.0 * u[i + 1] -
                       9.0 * u[i + 2] + u[i + 3]) /
                      (60.0 * h);
    const double d2 = (2.0 * u[i - 3] - 27.0 * u[i - 2] + 270.0 * u[i - 1] - 490.0 * u[i] +
                       270.0 * u[i + 1] - 27.0 * u[i + 2] + 2.0 * u[i + 3]) /
                      (180.0 * h * h);
    const double res =
        d2 + (n - 1) * d1 / r - u[i] + std::pow(std::abs(u[i]), p - 1.0) * u[i];
    res_max = std::max(res_max, std::abs(res));
  }
  if (res_max > tol)
    throw ConvergenceError("solve_ground_state: ODE residual " + std::to_string(res_max) +
                           " exceeds tol " + std::to_string(tol));

  // exponential decay rate, fitted on the algebraically corrected tail
  {
    const int i0 = static_cast<int>(0.45 * total), i1 = static_cast<int>(0.70 * total);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int i = i0; i < i1; ++i) {
      const double r = prof.radii[i];
      const double y = std::log(prof.values[i]) + 0.5 * (n - 1) * std::log(r);
      sx += r;
      sy += y;
      sxx += r * r;
      sxy += r * y;
      ++cnt;
    }
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    prof.decay_rate = -slope;
  }
  if (std::abs(prof.decay_rate - 1.0) > 0.1)
    throw ConvergenceError("solve_ground_state: fitted decay rate " +
                           std::to_string(prof.decay_rate) + " deviates from 1 by more than 10%");
  return prof;
}

double RadialProfile::value_at(double r) const {
  if (r <= 0.0) return peak;
  if (r >= radii.back()) {
    // continue the fitted exponential decay beyond the stored range
    const double r0 = radii.back();
    return values.back() * std::exp(-decay_rate * (r - r0));
  }
  const auto it = std::upper_bound(radii.begin(), radii.end(), r);
  const size_t i = static_cast<size_t>(it - radii.begin()) - 1;

  if (slopes_.size() != radii.size()) slopes_ = monotone_slopes(radii, values);
  const double dx = radii[i + 1] - radii[i];
  const double t = (r - radii[i]) / dx;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  const double h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t);
  const double h11 = t * t * (t - 1);
  return h00 * values[i] + h10 * dx * slopes_[i] + h01 * values[i + 1] +
         h11 * dx * slopes_[i + 1];
}

void RadialProfile::save(std::ostream& os) const {
  os << "# " << n << " " << std::setprecision(17) << p << " " << peak << " " << decay_rate
     << "\n";
  for (size_t i = 0; i < radii.size(); ++i) os << radii[i] << " " << values[i] << "\n";
}

void RadialProfile::save_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw ResourceError("RadialProfile::save_file: cannot open " + path);
  save(os);
}

RadialProfile RadialProfile::load(std::istream& is) {
  RadialProfile prof;
  std::string line;
  if (!std::getline(is, line) || line.empty() || line[0] != '#')
    throw ValidationError("RadialProfile::load: missing header line");
  {
    std::istringstream hs(line.substr(1));
    if (!(hs >> prof.n >> prof.p >> prof.peak >> prof.decay_rate))
      throw ValidationError("RadialProfile::load: malformed header");
  }
  double r, u;
  while (is >> r >> u) {
    prof.radii.push_back(r);
    prof.values.push_back(u);
  }
  if (prof.radii.size() < 8) throw ValidationError("RadialProfile::load: too few samples");
  return prof;
}

RadialProfile RadialProfile::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ResourceError("RadialProfile::load_file: cannot open " + path);
  return load(is);
}

std::pair<double, double> scaling_coefficients(const ProblemSpec& spec, const Point& xi) {
  const Point exi{spec.epsilon * xi[0], spec.epsilon * xi[1], spec.epsilon * xi[2]};
  const double oneV = 1.0 + spec.V_at(exi);
  const double k = spec.K_at(exi);
  if (!(oneV > 0.0)) throw DomainError("scaling_coefficients: 1+V(eps xi) <= 0");
  if (!(k > 0.0)) throw DomainError("scaling_coefficients: K(eps xi) <= 0");
  const double alpha = std::pow(oneV / k, 1.0 / (spec.p - 1.0));
  const double beta = std::sqrt(oneV);
  return {alpha, beta};
}

namespace {

void check_placement(const RadialProfile& profile, const ProblemSpec& spec, const Point& xi,
                     const CartesianGrid& grid, double beta) {
  if (profile.n != spec.n || std::abs(profile.p - spec.p) > 1e-12)
    throw ValidationError("build_ansatz: profile (n, p) does not match the problem spec");
  if (grid.dim != spec.n) throw ValidationError("build_ansatz: grid dimension mismatch");
  const double margin = 4.0 / (profile.decay_rate * beta);
  for (int a = 0; a < grid.dim; ++a)
    if (std::abs(xi[a]) > grid.radius - margin)
      throw PlacementError("build_ansatz: xi closer than four decay lengths to the boundary");
}

} // namespace

GridFunction build_ansatz(const RadialProfile& profile, const ProblemSpec& spec, const Point& xi,
                          const CartesianGrid& grid) {
  const auto [alpha, beta] = scaling_coefficients(spec, xi);
  check_placement(profile, spec, xi, grid, beta);
  GridFunction out(grid, FieldKind::real);
  const std::int64_t nn = grid.node_count();
  for (std::int64_t j = 0; j < nn; ++j) {
    const Point x = grid.coord(j);
    double r2 = 0.0;
    for (int a = 0; a < grid.dim; ++a) r2 += (x[a] - xi[a]) * (x[a] - xi[a]);
    out[j] = alpha * profile.value_at(beta * std::sqrt(r2));
  }
  return out;
}

GridFunction build_magnetic_ansatz(const RadialProfile& profile, const ProblemSpec& spec,
                                   const Point& xi, double sigma, const CartesianGrid& grid) {
  const auto [alpha, beta] = scaling_coefficients(spec, xi);
  check_placement(profile, spec, xi, grid, beta);
  const Point exi{spec.epsilon * xi[0], spec.epsilon * xi[1], spec.epsilon * xi[2]};
  const Point a_frozen = spec.A_at(exi);
  GridFunction out(grid, FieldKind::complex_);
  const std::int64_t nn = grid.node_count();
  for (std::int64_t j = 0; j < nn; ++j) {
    const Point x = grid.coord(j);
    double r2 = 0.0, phase = sigma;
    for (int a = 0; a < grid.dim; ++a) {
      r2 += (x[a] - xi[a]) * (x[a] - xi[a]);
      phase += a_frozen[a] * x[a];
    }
    const double mod = alpha * profile.value_at(beta * std::sqrt(r2));
    out.set_cval(j, std::polar(mod, phase));
  }
  return out;
}

} // namespace concentra
