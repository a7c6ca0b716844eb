#include "concentra/homoclinic.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace concentra {

void HamiltonianSpec::validate() const {
  if (!(sigma_exp > 0.0)) throw ValidationError("hamiltonian.sigma: sigma > 0 required");
  if (!a) throw ValidationError("hamiltonian.a: potential a(t) required");
  double amax = 0.0, asum = 0.0;
  for (double t = -50.0; t <= 50.0; t += 0.5) {
    const double v = a(t);
    if (v < -1e-12)
      throw ValidationError("hamiltonian.a: potential must be nonnegative");
    amax = std::max(amax, v);
    asum += v;
  }
  if (asum <= 0.0) throw ValidationError("hamiltonian.a: potential is identically zero");
}

double HamiltonianSpec::Hu(double t, double u, double v) const {
  const double au = a(t);
  return lambda * u + au * u - std::pow(std::abs(u), sigma_exp) * u / (1.0 + std::exp(-t)) +
         u * v * v / (std::exp(t) + 1.0);
}

double HamiltonianSpec::Hv(double t, double u, double v) const {
  return v + u * u * v / (std::exp(t) + 1.0);
}

namespace {

// number of eigenvalues of the tridiagonal (diag, off) matrix below x
int sturm_count(const std::vector<double>& diag, const std::vector<double>& off, double x) {
  const size_t m = diag.size();
  int count = 0;
  double q = diag[0] - x;
  if (q < 0.0) ++count;
  for (size_t i = 1; i < m; ++i) {
    if (q == 0.0) q = -1e-300;
    q = (diag[i] - x) - off[i - 1] * off[i - 1] / q;
    if (q < 0.0) ++count;
  }
  return count;
}

struct SturmOperator {
  std::vector<double> t, diag, off;
  double h = 0.0;

  static SturmOperator build(const TimeField& a, double T, int M) {
    SturmOperator op;
    op.h = 2.0 * T / (M - 1);
    op.t.resize(M);
    for (int i = 0; i < M; ++i) op.t[i] = -T + i * op.h;
    // Dirichlet interior nodes 1..M-2 of -d^2/dt^2 - a(t)
    const int dof = M - 2;
    op.diag.resize(dof);
    op.off.assign(dof - 1, -1.0 / (op.h * op.h));
    for (int i = 0; i < dof; ++i)
      op.diag[i] = 2.0 / (op.h * op.h) - a(op.t[i + 1]);
    return op;
  }

  double smallest_eigenvalue() const {
    double lo = *std::min_element(diag.begin(), diag.end()) - 2.0 / (h * h) - 1.0;
    double hi = *std::max_element(diag.begin(), diag.end()) + 2.0 / (h * h) + 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (sturm_count(diag, off, mid) >= 1)
        hi = mid;
      else
        lo = mid;
      if (hi - lo < 1e-13 * (1.0 + std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
  }

  int count_near(double lambda, double tol) const {
    return sturm_count(diag, off, lambda + tol) - sturm_count(diag, off, lambda - tol);
  }

  /// k-th eigenvalue (0-based) by Sturm bisection.
  double eigenvalue(int kidx) const {
    double lo = *std::min_element(diag.begin(), diag.end()) - 2.0 / (h * h) - 1.0;
    double hi = *std::max_element(diag.begin(), diag.end()) + 2.0 / (h * h) + 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (sturm_count(diag, off, mid) >= kidx + 1)
        hi = mid;
      else
        lo = mid;
      if (hi - lo < 1e-13 * (1.0 + std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
  }

  std::vector<double> eigenvector(double lambda) const {
    const size_t dof = diag.size();
    std::vector<double> v(dof, 1.0);
    for (size_t i = 0; i < dof; ++i) v[i] = std::sin(0.31 * double(i + 1));
    for (int pass = 0; pass < 4; ++pass) {
      // shifted Thomas solve (small regularization keeps it nonsingular)
      std::vector<double> lo(dof), di(dof), up(dof), rhs = v;
      for (size_t i = 0; i < dof; ++i) {
        di[i] = diag[i] - lambda + 1e-10;
        lo[i] = i > 0 ? off[i - 1] : 0.0;
        up[i] = i + 1 < dof ? off[i] : 0.0;
      }
      for (size_t i = 1; i < dof; ++i) {
        const double f = lo[i] / di[i - 1];
        di[i] -= f * up[i - 1];
        rhs[i] -= f * rhs[i - 1];
      }
      rhs[dof - 1] /= di[dof - 1];
      for (size_t i = dof - 1; i-- > 0;) rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / di[i];
      double nrm = 0.0;
      for (double x : rhs) nrm += x * x;
      nrm = std::sqrt(nrm * h);
      for (size_t i = 0; i < dof; ++i) v[i] = rhs[i] / nrm;
    }
    return v;
  }
};

} // namespace

Lambda0Result lambda0(const TimeField& a, double T, int M) {
  if (!a) throw ValidationError("lambda0: potential required");
  if (M < 512) throw ValidationError("lambda0: M >= 512 required");
  double amax = 0.0;
  for (double t = -T; t <= T; t += T / 256.0) amax = std::max(amax, a(t));
  if (amax > 0.0 && (a(T) > 1e-8 * amax || a(-T) > 1e-8 * amax))
    throw ValidationError("lambda0: T too small, a(+-T) exceeds 1e-8 * max a");

  const SturmOperator op = SturmOperator::build(a, T, M);
  Lambda0Result out;
  out.value = op.smallest_eigenvalue();
  out.admissible = out.value < 0.0;

  const std::vector<double> v = op.eigenvector(out.value);
  out.t = op.t;
  out.phi.assign(M, 0.0);
  for (int i = 1; i < M - 1; ++i) out.phi[i] = v[i - 1];
  // positive normalization
  double mx = 0.0;
  for (double x : out.phi)
    if (std::abs(x) > std::abs(mx)) mx = x;
  if (mx < 0.0)
    for (double& x : out.phi) x = -x;
  return out;
}

Hyperbolicity hyperbolicity_check(double lambda) {
  if (lambda < 0.0) return Hyperbolicity::hyperbolic;
  if (lambda == 0.0) return Hyperbolicity::degenerate;
  return Hyperbolicity::elliptic;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Collocation state: nodes t_0..t_(M-1); unknowns v at every node and u at
/// interior nodes (u(+-T) = 0 Dirichlet).
struct Collocation {
  const HamiltonianSpec* spec;
  double T = 20.0;
  int M = 2048;
  double h = 0.0;
  std::vector<double> t;

  int dof() const { return (M - 2) + M; } // u interior + v everywhere

  int iu(int node) const { return node - 1; }         // valid 1..M-2
  int iv(int node) const { return (M - 2) + node; }   // 0..M-1

  double u_at(const Eigen::VectorXd& X, int node) const {
    if (node == 0 || node == M - 1) return 0.0;
    return X[iu(node)];
  }
  double v_at(const Eigen::VectorXd& X, int node) const { return X[iv(node)]; }

  /// Trapezoidal residual; 2(M-1) equations.
  Eigen::VectorXd residual(const Eigen::VectorXd& X, double lambda) const {
    HamiltonianSpec s = *spec;
    s.lambda = lambda;
    Eigen::VectorXd F(2 * (M - 1));
    for (int j = 0; j + 1 < M; ++j) {
      const double u0 = u_at(X, j), u1 = u_at(X, j + 1);
      const double v0 = v_at(X, j), v1 = v_at(X, j + 1);
      F[2 * j] = (u1 - u0) / h - 0.5 * (s.Hv(t[j], u0, v0) + s.Hv(t[j + 1], u1, v1));
      F[2 * j + 1] = (v1 - v0) / h + 0.5 * (s.Hu(t[j], u0, v0) + s.Hu(t[j + 1], u1, v1));
    }
    return F;
  }

  /// Jacobian in sparse triplets; also fills d residual / d lambda.
  SpMat jacobian(const Eigen::VectorXd& X, double lambda, Eigen::VectorXd* dF_dlambda) const {
    HamiltonianSpec s = *spec;
    s.lambda = lambda;
    std::vector<Triplet> trip;
    trip.reserve(16 * M);
    if (dF_dlambda) dF_dlambda->setZero(2 * (M - 1));
    const auto dHu_du = [&](double tt, double u, double v) {
      return lambda + s.a(tt) -
             (s.sigma_exp + 1.0) * std::pow(std::abs(u), s.sigma_exp) / (1.0 + std::exp(-tt)) +
             v * v / (std::exp(tt) + 1.0);
    };
    const auto dHu_dv = [&](double tt, double u, double v) {
      return 2.0 * u * v / (std::exp(tt) + 1.0);
    };
    const auto dHv_du = dHu_dv;
    const auto dHv_dv = [&](double tt, double u, double) {
      return 1.0 + u * u / (std::exp(tt) + 1.0);
    };

    for (int j = 0; j + 1 < M; ++j) {
      for (int side = 0; side < 2; ++side) {
        const int node = j + side;
        const double tt = t[node];
        const double u = u_at(X, node), v = v_at(X, node);
        const double sgn_du = side == 0 ? -1.0 / h : 1.0 / h;
        // row 2j: d/du, d/dv of (u1-u0)/h - avg Hv
        if (node != 0 && node != M - 1)
          trip.emplace_back(2 * j, iu(node), sgn_du - 0.5 * dHv_du(tt, u, v));
        trip.emplace_back(2 * j, iv(node), -0.5 * dHv_dv(tt, u, v));
        // row 2j+1: (v1-v0)/h + avg Hu
        if (node != 0 && node != M - 1)
          trip.emplace_back(2 * j + 1, iu(node), 0.5 * dHu_du(tt, u, v));
        trip.emplace_back(2 * j + 1, iv(node), sgn_du + 0.5 * dHu_dv(tt, u, v));
        if (dF_dlambda) (*dF_dlambda)[2 * j + 1] += 0.5 * u; // d Hu / d lambda = u
      }
    }
    SpMat J(2 * (M - 1), dof());
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
  }
};

BranchPoint make_branch_point(const Collocation& col, const Eigen::VectorXd& X, double lambda,
                              double arclength) {
  BranchPoint bp;
  bp.lambda = lambda;
  bp.arclength = arclength;
  bp.x.t = col.t;
  bp.x.u.resize(col.M);
  bp.x.v.resize(col.M);
  double amp = 0.0;
  for (int j = 0; j < col.M; ++j) {
    bp.x.u[j] = col.u_at(X, j);
    bp.x.v[j] = col.v_at(X, j);
    amp = std::max(amp, std::abs(bp.x.u[j]));
  }
  bp.amplitude = amp;
  bp.residual = col.residual(X, lambda).lpNorm<Eigen::Infinity>();
  return bp;
}

Eigen::VectorXd newton_correct(const Collocation& col, Eigen::VectorXd X, double lambda,
                               const HomoclinicOptions& opts) {
  Eigen::VectorXd F = col.residual(X, lambda);
  double rn = F.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < opts.max_newton && rn > opts.residual_tol; ++it) {
    const SpMat J = col.jacobian(X, lambda, nullptr);
    Eigen::SparseLU<SpMat> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success)
      throw SolverError("solve_homoclinic: singular collocation Jacobian");
    const Eigen::VectorXd step = lu.solve(-F);
    double damp = 1.0;
    bool improved = false;
    for (int half = 0; half < 10; ++half) {
      const Eigen::VectorXd X2 = X + damp * step;
      const Eigen::VectorXd F2 = col.residual(X2, lambda);
      const double rn2 = F2.lpNorm<Eigen::Infinity>();
      if (rn2 < rn) {
        X = X2;
        F = F2;
        rn = rn2;
        improved = true;
        break;
      }
      damp *= 0.5;
    }
    if (!improved)
      throw ConvergenceError("solve_homoclinic: damped Newton stalled at residual " +
                             std::to_string(rn));
  }
  if (rn > opts.residual_tol)
    throw ConvergenceError("solve_homoclinic: no convergence, residual " + std::to_string(rn));
  return X;
}

} // namespace

Trajectory seed_from_eigenfunction(const Lambda0Result& l0, double delta) {
  Trajectory tr;
  tr.t = l0.t;
  const size_t m = l0.t.size();
  tr.u.resize(m);
  tr.v.resize(m);
  double peak = 0.0;
  for (double x : l0.phi) peak = std::max(peak, std::abs(x));
  if (!(peak > 0.0)) throw ValidationError("seed_from_eigenfunction: zero eigenfunction");
  const double scale = delta / peak;
  const double h = l0.t[1] - l0.t[0];
  for (size_t i = 0; i < m; ++i) tr.u[i] = scale * l0.phi[i];
  for (size_t i = 0; i < m; ++i) {
    if (i == 0)
      tr.v[i] = (tr.u[1] - tr.u[0]) / h;
    else if (i + 1 == m)
      tr.v[i] = (tr.u[m - 1] - tr.u[m - 2]) / h;
    else
      tr.v[i] = (tr.u[i + 1] - tr.u[i - 1]) / (2.0 * h);
  }
  return tr;
}

BranchPoint solve_homoclinic(const HamiltonianSpec& spec, const Trajectory& guess, double T,
                             int M, const HomoclinicOptions& opts) {
  spec.validate();
  if (hyperbolicity_check(spec.lambda) != Hyperbolicity::hyperbolic)
    throw ValidationError("solve_homoclinic: lambda must be negative (hyperbolic regime)");
  if (M < 128) throw ValidationError("solve_homoclinic: M >= 128 required");
  if (guess.t.empty() || guess.t.size() != guess.u.size() || guess.t.size() != guess.v.size())
    throw ValidationError("solve_homoclinic: malformed guess trajectory");

  Collocation col;
  col.spec = &spec;
  col.T = T;
  col.M = M;
  col.h = 2.0 * T / (M - 1);
  col.t.resize(M);
  for (int j = 0; j < M; ++j) col.t[j] = -T + j * col.h;

  // linear resample of the guess onto the solver nodes
  const auto sample_guess = [&](const std::vector<double>& field, double tt) {
    if (tt <= guess.t.front()) return field.front();
    if (tt >= guess.t.back()) return field.back();
    const auto it = std::upper_bound(guess.t.begin(), guess.t.end(), tt);
    const size_t i = static_cast<size_t>(it - guess.t.begin()) - 1;
    const double w = (tt - guess.t[i]) / (guess.t[i + 1] - guess.t[i]);
    return (1.0 - w) * field[i] + w * field[i + 1];
  };

  Eigen::VectorXd X(col.dof());
  X.setZero();
  double seed_amp = 0.0;
  for (int j = 1; j < M - 1; ++j) {
    X[col.iu(j)] = sample_guess(guess.u, col.t[j]);
    seed_amp = std::max(seed_amp, std::abs(X[col.iu(j)]));
  }
  for (int j = 0; j < M; ++j) X[col.iv(j)] = sample_guess(guess.v, col.t[j]);
  if (seed_amp <= 0.0)
    throw ConvergenceError(
        "solve_homoclinic: trivial attractor, zero seed converges to the zero solution; "
        "try a larger seed");

  X = newton_correct(col, X, spec.lambda, opts);
  BranchPoint bp = make_branch_point(col, X, spec.lambda, 0.0);
  if (bp.amplitude < opts.amplitude_floor)
    throw ConvergenceError(
        "solve_homoclinic: trivial attractor, converged amplitude " +
        std::to_string(bp.amplitude) + " below the floor; try a larger seed");
  const double decay_tol = 1e-6 * std::max(1.0, bp.amplitude);
  if (std::abs(bp.x.u[1]) > decay_tol || std::abs(bp.x.v[0]) > decay_tol ||
      std::abs(bp.x.u[M - 2]) > decay_tol || std::abs(bp.x.v[M - 1]) > decay_tol)
    throw ConvergenceError("solve_homoclinic: solution does not decay at the truncated ends");
  return bp;
}

ContinuationResult continue_branch(const HamiltonianSpec& spec, const BranchPoint& from,
                                   int steps, double ds, const HomoclinicOptions& opts) {
  spec.validate();
  if (from.x.t.size() < 128) throw ValidationError("continue_branch: malformed branch point");
  if (!(std::abs(ds) > 0.0)) throw ValidationError("continue_branch: ds must be nonzero");
  if (from.residual > 10.0 * opts.residual_tol)
    throw ValidationError("continue_branch: starting point residual too large");

  Collocation col;
  col.spec = &spec;
  col.M = static_cast<int>(from.x.t.size());
  col.T = from.x.t.back();
  col.h = from.x.t[1] - from.x.t[0];
  col.t = from.x.t;
  const int n = col.dof();

  Eigen::VectorXd X(n);
  for (int j = 1; j < col.M - 1; ++j) X[col.iu(j)] = from.x.u[j];
  for (int j = 0; j < col.M; ++j) X[col.iv(j)] = from.x.v[j];
  double lambda = from.lambda;

  // initial tangent from J dX = -F_lambda, oriented toward decreasing lambda
  Eigen::VectorXd tan_x(n);
  double tan_l;
  {
    Eigen::VectorXd dFdl;
    const SpMat J = col.jacobian(X, lambda, &dFdl);
    Eigen::SparseLU<SpMat> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success)
      throw SolverError("continue_branch: singular Jacobian at the start point");
    const Eigen::VectorXd dXdl = lu.solve(-dFdl);
    const double nrm = std::sqrt(col.h * dXdl.squaredNorm() + 1.0);
    tan_x = dXdl / nrm;
    tan_l = 1.0 / nrm;
    if (tan_l > 0.0) {
      tan_x = -tan_x;
      tan_l = -tan_l;
    }
  }

  ContinuationResult out;
  out.points.push_back(from);
  double arclength = from.arclength;
  double step = ds;

  for (int k = 0; k < steps; ++k) {
    bool stepped = false;
    for (int halving = 0; halving <= 5 && !stepped; ++halving) {
      Eigen::VectorXd Xp = X + step * tan_x;
      double lp = lambda + step * tan_l;
      // corrector on [F; pseudo-arclength constraint]
      bool ok = true;
      for (int it = 0; it < opts.max_newton; ++it) {
        const Eigen::VectorXd F = col.residual(Xp, lp);
        const double cons =
            col.h * tan_x.dot(Xp - X) + tan_l * (lp - lambda) - step;
        const double rn = std::max(F.lpNorm<Eigen::Infinity>(), std::abs(cons));
        if (rn <= opts.residual_tol) break;
        if (it + 1 == opts.max_newton) {
          ok = false;
          break;
        }
        Eigen::VectorXd dFdl;
        const SpMat J = col.jacobian(Xp, lp, &dFdl);
        // bordered solve via block elimination
        Eigen::SparseLU<SpMat> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success) {
          ok = false;
          break;
        }
        const Eigen::VectorXd a = lu.solve(-F);
        const Eigen::VectorXd b = lu.solve(-dFdl);
        // (h tan_x . (dX) ) + tan_l dlam = -cons, dX = a + b dlam
        const double denom = col.h * tan_x.dot(b) + tan_l;
        if (denom == 0.0) {
          ok = false;
          break;
        }
        const double dlam = (-cons - col.h * tan_x.dot(a)) / denom;
        Xp += a + b * dlam;
        lp += dlam;
        if (!Xp.allFinite() || !std::isfinite(lp)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        const Eigen::VectorXd tx = (Xp - X) / step;
        const double tl = (lp - lambda) / step;
        const double nrm = std::sqrt(col.h * tx.squaredNorm() + tl * tl);
        tan_x = tx / nrm;
        tan_l = tl / nrm;
        X = Xp;
        lambda = lp;
        arclength += std::abs(step);
        out.points.push_back(make_branch_point(col, X, lambda, arclength));
        stepped = true;
      } else {
        step *= 0.5;
      }
    }
    if (!stepped) {
      out.termination_cause = "stall";
      return out;
    }
    step = ds; // fixed-step continuation keeps retracing deterministic

    const double xnorm = std::sqrt(col.h * X.squaredNorm());
    if (xnorm > opts.norm_cap || out.points.back().amplitude > opts.norm_cap) {
      out.termination_cause = "unbounded-proxy";
      return out;
    }
    if (lambda > opts.lambda_boundary) {
      out.termination_cause = "boundary";
      return out;
    }
  }
  out.termination_cause = "budget";
  return out;
}

int kernel_dimension(const TimeField& a, double lambda, double T, int M, double tol) {
  const SturmOperator op = SturmOperator::build(a, T, M);
  return op.count_near(lambda, tol);
}

int parity_at_channels(const std::vector<TimeField>& potentials, double lambda0_value, double T,
                       int M) {
  if (potentials.empty()) throw ValidationError("parity_at: at least one channel");
  const double tol = 1e-6 * std::max(1.0, std::abs(lambda0_value));
  int k = 0;
  for (const auto& a : potentials) {
    const SturmOperator op = SturmOperator::build(a, T, M);
    const int kc = op.count_near(lambda0_value, tol);
    k += kc;
    if (kc == 0) continue;
    // transversality: Gram of the u components of the kernel under the
    // pairing D_lambda D^2 H = diag(1, 0)
    const int below = sturm_count(op.diag, op.off, lambda0_value - tol);
    Eigen::MatrixXd gram(kc, kc);
    std::vector<std::vector<double>> funcs;
    for (int i = 0; i < kc; ++i)
      funcs.push_back(op.eigenvector(op.eigenvalue(below + i)));
    for (int i = 0; i < kc; ++i)
      for (int j = 0; j < kc; ++j) {
        double acc = 0.0;
        for (size_t q = 0; q < funcs[i].size(); ++q) acc += funcs[i][q] * funcs[j][q];
        gram(i, j) = acc * op.h;
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.eigenvalues().cwiseAbs().minCoeff() < 1e-8)
      throw DegenerateError("parity_at: transversality pairing degenerate on the kernel");
  }
  return (k % 2 == 0) ? 1 : -1;
}

int parity_at(const HamiltonianSpec& spec, double lambda0_value, double T, int M) {
  spec.validate();
  return parity_at_channels({spec.a}, lambda0_value, T, M);
}

} // namespace concentra
