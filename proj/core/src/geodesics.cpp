#include "concentra/geodesics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace concentra {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
}

void LoopState::validate() const {
  if (p.size() < 2 || p.size() != q.size())
    throw ValidationError("LoopState: p, q must live in R^(N+1), N >= 1");
  if (quad_nodes < 16) throw ValidationError("LoopState: need at least 16 quadrature nodes");
  double pn = 0.0, qn = 0.0, pq = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    pn += p[i] * p[i];
    qn += q[i] * q[i];
    pq += p[i] * q[i];
  }
  if (std::abs(std::sqrt(pn) - 1.0) > 1e-12 || std::abs(std::sqrt(qn) - 1.0) > 1e-12 ||
      std::abs(pq) > 1e-12)
    throw ValidationError("LoopState: (p, q) violates the Stiefel constraints");
}

void MetricPerturbation::eval(double s, const std::vector<double>& xi,
                              std::vector<double>& H) const {
  h(s, xi, H);
}

namespace {

struct GammaEvaluator {
  const MetricPerturbation* h;
  int N;
  int nodes;
  mutable std::vector<double> H, z, zdot, w;

  // Gamma(r, p, q); (p, q) enters only through z and zdot.
  double operator()(double r, const std::vector<double>& p, const std::vector<double>& q,
                    bool check_symmetry = false) const {
    const int amb = N + 2;
    H.resize(amb * amb);
    z.resize(N + 1);
    zdot.resize(N + 1);
    w.assign(amb, 0.0);
    double acc = 0.0;
    for (int j = 0; j < nodes; ++j) {
      const double t = double(j) / nodes;
      const double c = std::cos(kTwoPi * t), s_ = std::sin(kTwoPi * t);
      for (int i = 0; i <= N; ++i) {
        z[i] = p[i] * c + q[i] * s_;
        zdot[i] = kTwoPi * (-p[i] * s_ + q[i] * c);
      }
      h->eval(r, z, H);
      if (check_symmetry) {
        double scale = 0.0, asym = 0.0;
        for (int a = 0; a < amb; ++a)
          for (int b = 0; b < amb; ++b) {
            scale = std::max(scale, std::abs(H[a * amb + b]));
            asym = std::max(asym, std::abs(H[a * amb + b] - H[b * amb + a]));
          }
        if (asym > 1e-12 * (1.0 + scale))
          throw ValidationError("melnikov_gamma: asymmetric metric perturbation sample");
      }
      // tangent vector (0, zdot) in ambient coordinates
      for (int i = 0; i <= N; ++i) w[1 + i] = zdot[i];
      double quad = 0.0;
      for (int a = 0; a < amb; ++a) {
        double row = 0.0;
        for (int b = 0; b < amb; ++b) row += H[a * amb + b] * w[b];
        quad += w[a] * row;
      }
      acc += quad;
    }
    return 0.5 * acc / nodes;
  }
};

void orthonormalize_pq(std::vector<double>& p, std::vector<double>& q) {
  double pn = 0.0;
  for (double v : p) pn += v * v;
  pn = std::sqrt(pn);
  for (double& v : p) v /= pn;
  double pq = 0.0;
  for (size_t i = 0; i < p.size(); ++i) pq += p[i] * q[i];
  for (size_t i = 0; i < q.size(); ++i) q[i] -= pq * p[i];
  double qn = 0.0;
  for (double v : q) qn += v * v;
  qn = std::sqrt(qn);
  for (double& v : q) v /= qn;
}

/// O(2) phase fixing: rotate so that p.e1 is maximal, then orient q.
void canonicalize_pq(std::vector<double>& p, std::vector<double>& q) {
  const double tau = std::atan2(q[0], p[0]);
  const double c = std::cos(tau), s = std::sin(tau);
  std::vector<double> p2(p.size()), q2(q.size());
  for (size_t i = 0; i < p.size(); ++i) {
    p2[i] = p[i] * c + q[i] * s;
    q2[i] = -p[i] * s + q[i] * c;
  }
  // reflection freedom q -> -q: fix the sign of the first sizable entry
  for (size_t i = 0; i < q2.size(); ++i) {
    if (std::abs(q2[i]) > 1e-9) {
      if (q2[i] < 0.0)
        for (double& v : q2) v = -v;
      break;
    }
  }
  p = std::move(p2);
  q = std::move(q2);
}

struct Lcg {
  std::uint64_t state;
  double next() {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return double(state >> 11) * (1.0 / 9007199254740992.0) * 2.0 - 1.0;
  }
};

} // namespace

double melnikov_gamma(const LoopState& loop, const MetricPerturbation& h) {
  loop.validate();
  if (loop.sphere_dim() != h.N)
    throw ValidationError("melnikov_gamma: loop and perturbation disagree on N");
  GammaEvaluator gamma{&h, h.N, loop.quad_nodes, {}, {}, {}, {}};
  return gamma(loop.r, loop.p, loop.q, /*check_symmetry=*/true);
}

std::vector<GeodesicCandidate> find_geodesic_candidates(const MetricPerturbation& h, int N,
                                                        int multistart,
                                                        const GeodesicSearchOptions& opts) {
  if (N < 1) throw ValidationError("find_geodesic_candidates: N >= 1 required");
  if (multistart < 1) throw ValidationError("find_geodesic_candidates: multistart >= 1");
  GammaEvaluator gamma{&h, N, opts.quad_nodes, {}, {}, {}, {}};

  const int nv = N + 1;       // ambient sphere dimension
  const int dim = 1 + 2 * nv; // (r, p, q)

  const auto pack = [&](double r, const std::vector<double>& p, const std::vector<double>& q) {
    Eigen::VectorXd y(dim);
    y[0] = r;
    for (int i = 0; i < nv; ++i) {
      y[1 + i] = p[i];
      y[1 + nv + i] = q[i];
    }
    return y;
  };
  const auto unpack = [&](const Eigen::VectorXd& y, double& r, std::vector<double>& p,
                          std::vector<double>& q) {
    r = y[0];
    p.assign(nv, 0.0);
    q.assign(nv, 0.0);
    for (int i = 0; i < nv; ++i) {
      p[i] = y[1 + i];
      q[i] = y[1 + nv + i];
    }
  };
  const auto gamma_y = [&](const Eigen::VectorXd& y) {
    double r;
    std::vector<double> p, q;
    unpack(y, r, p, q);
    return gamma(r, p, q);
  };
  const auto grad_y = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd g(dim);
    const double fd = 1e-5;
    for (int i = 0; i < dim; ++i) {
      Eigen::VectorXd yp = y, ym = y;
      yp[i] += fd;
      ym[i] -= fd;
      g[i] = (gamma_y(yp) - gamma_y(ym)) / (2.0 * fd);
    }
    return g;
  };
  // constraints c = (|p|^2-1, |q|^2-1, p.q)
  const auto constraints = [&](const Eigen::VectorXd& y) {
    Eigen::Vector3d c;
    double pn = 0.0, qn = 0.0, pq = 0.0;
    for (int i = 0; i < nv; ++i) {
      pn += y[1 + i] * y[1 + i];
      qn += y[1 + nv + i] * y[1 + nv + i];
      pq += y[1 + i] * y[1 + nv + i];
    }
    c << pn - 1.0, qn - 1.0, pq;
    return c;
  };
  const auto constraint_jac = [&](const Eigen::VectorXd& y) {
    Eigen::MatrixXd Jc = Eigen::MatrixXd::Zero(3, dim);
    for (int i = 0; i < nv; ++i) {
      Jc(0, 1 + i) = 2.0 * y[1 + i];
      Jc(1, 1 + nv + i) = 2.0 * y[1 + nv + i];
      Jc(2, 1 + i) = y[1 + nv + i];
      Jc(2, 1 + nv + i) = y[1 + i];
    }
    return Jc;
  };

  // seeds: r lattice x {canonical frame + deterministic random frames}
  std::vector<Eigen::VectorXd> seeds;
  Lcg rng{12345};
  for (int cell = 0; cell < multistart; ++cell) {
    const double r = -opts.r_max + (cell + 0.5) * 2.0 * opts.r_max / multistart;
    for (int variant = 0; variant < 3; ++variant) {
      std::vector<double> p(nv, 0.0), q(nv, 0.0);
      if (variant == 0) {
        p[0] = 1.0;
        q[1] = 1.0;
      } else {
        for (int i = 0; i < nv; ++i) {
          p[i] = rng.next();
          q[i] = rng.next();
        }
        orthonormalize_pq(p, q);
      }
      seeds.push_back(pack(r, p, q));
    }
  }

  double scale = 1e-12;
  for (const auto& y : seeds) scale = std::max(scale, std::abs(gamma_y(y)));

  // flat-Gamma guard
  {
    double lo = 1e300, hi = -1e300;
    for (const auto& y : seeds) {
      const double v = gamma_y(y);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo <= 1e-14 && scale <= 1e-12) return {};
  }

  const double tol = 1e-9 * scale;

  std::vector<GeodesicCandidate> found;
  for (const auto& seed : seeds) {
    Eigen::VectorXd y = seed;
    Eigen::Vector3d lam = Eigen::Vector3d::Zero();

    const auto kkt = [&](const Eigen::VectorXd& yy, const Eigen::Vector3d& ll) {
      Eigen::VectorXd F(dim + 3);
      F.head(dim) = grad_y(yy) - constraint_jac(yy).transpose() * ll;
      F.tail(3) = constraints(yy);
      return F;
    };

    Eigen::VectorXd F = kkt(y, lam);
    bool converged = F.head(dim).norm() <= tol && F.tail(3).norm() <= 1e-12;
    for (int it = 0; it < opts.max_refine && !converged; ++it) {
      // finite-difference Jacobian of the KKT system
      Eigen::MatrixXd J(dim + 3, dim + 3);
      const double fd = 1e-5;
      for (int i = 0; i < dim; ++i) {
        Eigen::VectorXd yp = y;
        yp[i] += fd;
        J.col(i) = (kkt(yp, lam) - F) / fd;
      }
      for (int i = 0; i < 3; ++i) {
        Eigen::Vector3d lp = lam;
        lp[i] += fd;
        J.col(dim + i) = (kkt(y, lp) - F) / fd;
      }
      Eigen::VectorXd step = J.fullPivLu().solve(-F);
      if (!step.allFinite()) break;
      double damp = 1.0;
      bool improved = false;
      for (int half = 0; half < 8; ++half) {
        Eigen::VectorXd y2 = y + damp * step.head(dim);
        Eigen::Vector3d l2 = lam + damp * step.tail(3);
        // retraction: restore the Stiefel constraints exactly
        double r2;
        std::vector<double> p2, q2;
        unpack(y2, r2, p2, q2);
        orthonormalize_pq(p2, q2);
        y2 = pack(r2, p2, q2);
        const Eigen::VectorXd F2 = kkt(y2, l2);
        if (F2.norm() < F.norm()) {
          y = y2;
          lam = l2;
          F = F2;
          improved = true;
          break;
        }
        damp *= 0.5;
      }
      if (!improved) break;
      converged = F.head(dim).norm() <= tol && F.tail(3).norm() <= 1e-12;
    }
    if (!converged) continue;
    if (std::abs(y[0]) > opts.r_max) continue;

    GeodesicCandidate cand;
    std::vector<double> p, q;
    unpack(y, cand.r, p, q);
    orthonormalize_pq(p, q);
    cand.gamma = gamma(cand.r, p, q);

    // flatness of Gamma in the (p,q) directions at this r
    {
      Lcg prng{777};
      bool flat = true;
      for (int trial = 0; trial < 4 && flat; ++trial) {
        std::vector<double> pr(nv), qr(nv);
        for (int i = 0; i < nv; ++i) {
          pr[i] = prng.next();
          qr[i] = prng.next();
        }
        orthonormalize_pq(pr, qr);
        if (std::abs(gamma(cand.r, pr, qr) - cand.gamma) > 1e-10 * (1.0 + scale)) flat = false;
      }
      cand.pq_degenerate = flat;
    }

    canonicalize_pq(p, q);
    cand.p = p;
    cand.q = q;

    // classification by the projected Hessian of the Lagrangian, with the
    // O(2) orbit direction removed
    {
      const Eigen::VectorXd yc = pack(cand.r, p, q);
      Eigen::MatrixXd H(dim, dim);
      const double fd = 1e-4 * (1.0 + std::abs(cand.r));
      for (int i = 0; i < dim; ++i) {
        Eigen::VectorXd yp = yc, ym = yc;
        yp[i] += fd;
        ym[i] -= fd;
        H.col(i) = (grad_y(yp) - grad_y(ym)) / (2.0 * fd);
      }
      H = 0.5 * (H + H.transpose()).eval();
      // Hessian of the Lagrangian: subtract lam . D^2 c (constant Hessians)
      for (int i = 0; i < nv; ++i) {
        H(1 + i, 1 + i) -= 2.0 * lam[0];
        H(1 + nv + i, 1 + nv + i) -= 2.0 * lam[1];
        H(1 + i, 1 + nv + i) -= lam[2];
        H(1 + nv + i, 1 + i) -= lam[2];
      }
      // tangent space: orthogonal complement of constraint normals + orbit
      Eigen::MatrixXd normals(dim, 4);
      normals.setZero();
      Eigen::MatrixXd Jc = constraint_jac(yc);
      for (int i = 0; i < 3; ++i) normals.col(i) = Jc.row(i).transpose();
      for (int i = 0; i < nv; ++i) {
        normals(1 + i, 3) = q[i];
        normals(1 + nv + i, 3) = -p[i];
      }
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(normals);
      Eigen::MatrixXd Qfull = qr.householderQ();
      Eigen::MatrixXd T = Qfull.rightCols(dim - 4); // orthonormal tangent basis
      Eigen::MatrixXd Hp = T.transpose() * H * T;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hp);
      double emax = 0.0;
      for (int i = 0; i < es.eigenvalues().size(); ++i)
        emax = std::max(emax, std::abs(es.eigenvalues()[i]));
      const double deg_tol = std::max(1e-7 * scale, 1e-6 * emax);
      int pos = 0, neg = 0, deg = 0;
      for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const double e = es.eigenvalues()[i];
        if (std::abs(e) <= deg_tol)
          ++deg;
        else if (e > 0.0)
          ++pos;
        else
          ++neg;
      }
      if (pos == 0 && neg == 0)
        cand.classification = GeodesicCandidate::Class::degenerate;
      else if (neg == 0)
        cand.classification = GeodesicCandidate::Class::minimum;
      else if (pos == 0)
        cand.classification = GeodesicCandidate::Class::maximum;
      else
        cand.classification = GeodesicCandidate::Class::saddle;
    }

    // seeds parked in the decayed tail satisfy the stationarity tolerance
    // trivially: value and Hessian both vanish there
    if (cand.classification == GeodesicCandidate::Class::degenerate &&
        std::abs(cand.gamma) <= 1e-6 * scale)
      continue;

    bool dup = false;
    for (const auto& c : found) {
      if (std::abs(c.r - cand.r) > 1e-4 * (1.0 + opts.r_max)) continue;
      if (std::abs(c.gamma - cand.gamma) > 1e-8 * (1.0 + scale)) continue;
      if (c.pq_degenerate && cand.pq_degenerate) {
        dup = true;
        break;
      }
      double dist = 0.0;
      for (int i = 0; i < nv; ++i)
        dist += (c.p[i] - cand.p[i]) * (c.p[i] - cand.p[i]) +
                (c.q[i] - cand.q[i]) * (c.q[i] - cand.q[i]);
      if (std::sqrt(dist) < 1e-3) {
        dup = true;
        break;
      }
    }
    if (!dup) found.push_back(std::move(cand));
  }

  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    if (a.r != b.r) return a.r < b.r;
    return a.gamma < b.gamma;
  });
  return found;
}

namespace {

/// Truncated Fourier loop on R x S^N: coefficients of r(t) and of the raw
/// (un-normalized) ambient sphere curve y(t).
struct FourierLoop {
  int modes = 4;
  int nv = 3; // N+1
  // layout per channel: [a0, a1, b1, ..., am, bm]; channels: r then y components
  std::vector<double> coef;

  int per_channel() const { return 2 * modes + 1; }
  int channels() const { return 1 + nv; }

  double eval_channel(int ch, double t, double* dt = nullptr) const {
    const double* c = coef.data() + ch * per_channel();
    double v = c[0], dv = 0.0;
    for (int k = 1; k <= modes; ++k) {
      const double ck = std::cos(kTwoPi * k * t), sk = std::sin(kTwoPi * k * t);
      v += c[2 * k - 1] * ck + c[2 * k] * sk;
      dv += kTwoPi * k * (-c[2 * k - 1] * sk + c[2 * k] * ck);
    }
    if (dt) *dt = dv;
    return v;
  }
};

struct LoopEnergy {
  const MetricPerturbation* h;
  double eps;
  int nodes;
  int N;
  mutable std::vector<double> H, x, xdot, w, y, ydot;

  double operator()(const FourierLoop& loop) const {
    const int nv = N + 1, amb = N + 2;
    H.resize(amb * amb);
    x.resize(nv);
    xdot.resize(nv);
    y.resize(nv);
    ydot.resize(nv);
    w.resize(amb);
    double acc = 0.0;
    for (int j = 0; j < nodes; ++j) {
      const double t = double(j) / nodes;
      double rdot;
      const double r = loop.eval_channel(0, t, &rdot);
      double ynorm2 = 0.0, ydoty = 0.0;
      for (int i = 0; i < nv; ++i) {
        y[i] = loop.eval_channel(1 + i, t, &ydot[i]);
        ynorm2 += y[i] * y[i];
        ydoty += y[i] * ydot[i];
      }
      const double ynorm = std::sqrt(ynorm2);
      if (ynorm < 1e-6)
        throw RefinementError("refine_closed_geodesic: loop degenerated to a point");
      for (int i = 0; i < nv; ++i) {
        x[i] = y[i] / ynorm;
        xdot[i] = (ydot[i] - ydoty / ynorm2 * y[i]) / ynorm;
      }
      w[0] = rdot;
      for (int i = 0; i < nv; ++i) w[1 + i] = xdot[i];
      double g0 = 0.0;
      for (int a = 0; a < amb; ++a) g0 += w[a] * w[a];
      double pert = 0.0;
      if (eps != 0.0) {
        h->eval(r, x, H);
        for (int a = 0; a < amb; ++a) {
          double row = 0.0;
          for (int b = 0; b < amb; ++b) row += H[a * amb + b] * w[b];
          pert += w[a] * row;
        }
      }
      acc += g0 + eps * pert;
    }
    return 0.5 * acc / nodes;
  }
};

} // namespace

RefinedLoop refine_closed_geodesic(const GeodesicCandidate& candidate,
                                   const MetricPerturbation& h, double eps, int fourier_modes,
                                   int quad_nodes) {
  if (fourier_modes < 1 || fourier_modes * 2 + 1 > quad_nodes / 2)
    throw ValidationError("refine_closed_geodesic: bad Fourier truncation");
  const int N = h.N, nv = N + 1;

  FourierLoop loop;
  loop.modes = fourier_modes;
  loop.nv = nv;
  loop.coef.assign(loop.channels() * loop.per_channel(), 0.0);
  // great-circle initialization: r constant, y = p cos + q sin
  loop.coef[0] = candidate.r;
  for (int i = 0; i < nv; ++i) {
    double* c = loop.coef.data() + (1 + i) * loop.per_channel();
    c[1] = candidate.p[i];
    c[2] = candidate.q[i];
  }

  LoopEnergy energy{&h, eps, quad_nodes, N, {}, {}, {}, {}, {}, {}};

  const int P = static_cast<int>(loop.coef.size());
  double cur = energy(loop);
  double gnorm = 0.0;
  const double fd = 1e-6;
  std::vector<double> grad(P);

  const auto fill_grad = [&]() {
    gnorm = 0.0;
    for (int i = 0; i < P; ++i) {
      FourierLoop lp = loop, lm = loop;
      lp.coef[i] += fd;
      lm.coef[i] -= fd;
      grad[i] = (energy(lp) - energy(lm)) / (2.0 * fd);
      gnorm += grad[i] * grad[i];
    }
    gnorm = std::sqrt(gnorm);
  };

  const auto renormalize = [&]() {
    // project the sphere part back to pointwise unit length, then back to
    // Fourier coefficients (exact DFT on the quadrature nodes)
    std::vector<std::vector<double>> xs(nv, std::vector<double>(quad_nodes));
    for (int j = 0; j < quad_nodes; ++j) {
      const double t = double(j) / quad_nodes;
      double nrm2 = 0.0;
      std::vector<double> yj(nv);
      for (int i = 0; i < nv; ++i) {
        yj[i] = loop.eval_channel(1 + i, t);
        nrm2 += yj[i] * yj[i];
      }
      const double nrm = std::sqrt(nrm2);
      for (int i = 0; i < nv; ++i) xs[i][j] = yj[i] / nrm;
    }
    for (int i = 0; i < nv; ++i) {
      double* c = loop.coef.data() + (1 + i) * loop.per_channel();
      c[0] = 0.0;
      for (int j = 0; j < quad_nodes; ++j) c[0] += xs[i][j];
      c[0] /= quad_nodes;
      for (int k = 1; k <= loop.modes; ++k) {
        double ak = 0.0, bk = 0.0;
        for (int j = 0; j < quad_nodes; ++j) {
          const double t = double(j) / quad_nodes;
          ak += xs[i][j] * std::cos(kTwoPi * k * t);
          bk += xs[i][j] * std::sin(kTwoPi * k * t);
        }
        c[2 * k - 1] = 2.0 * ak / quad_nodes;
        c[2 * k] = 2.0 * bk / quad_nodes;
      }
    }
  };

  fill_grad();
  for (int it = 0; it < 500 && gnorm > 1e-6; ++it) {
    double step = 0.5;
    bool improved = false;
    for (int half = 0; half < 30; ++half) {
      FourierLoop trial = loop;
      for (int i = 0; i < P; ++i) trial.coef[i] -= step * grad[i];
      const double v = energy(trial);
      if (v < cur - 1e-14) {
        loop = trial;
        renormalize();
        cur = energy(loop);
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    fill_grad();
  }

  RefinedLoop out;
  out.grad_norm = gnorm;
  out.energy = cur;
  out.r_center = loop.coef[0];
  out.t.resize(quad_nodes);
  out.r.resize(quad_nodes);
  out.x.assign(quad_nodes, std::vector<double>(nv));
  for (int j = 0; j < quad_nodes; ++j) {
    const double t = double(j) / quad_nodes;
    out.t[j] = t;
    out.r[j] = loop.eval_channel(0, t);
    double nrm2 = 0.0;
    for (int i = 0; i < nv; ++i) {
      out.x[j][i] = loop.eval_channel(1 + i, t);
      nrm2 += out.x[j][i] * out.x[j][i];
    }
    const double nrm = std::sqrt(nrm2);
    for (int i = 0; i < nv; ++i) out.x[j][i] /= nrm;
  }
  return out;
}

MetricPerturbation conformal_perturbation(int N, std::function<double(double)> phi) {
  MetricPerturbation h;
  h.N = N;
  h.h = [N, phi = std::move(phi)](double s, const std::vector<double>&, std::vector<double>& H) {
    const int amb = N + 2;
    H.assign(amb * amb, 0.0);
    const double v = phi(s);
    for (int a = 0; a < amb; ++a) H[a * amb + a] = v;
  };
  return h;
}

} // namespace concentra
