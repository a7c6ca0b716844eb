#include "concentra/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace concentra {

const char* to_string(TrichotomyReport::Label label) {
  switch (label) {
    case TrichotomyReport::Label::compactness: return "compactness";
    case TrichotomyReport::Label::vanishing: return "vanishing";
    case TrichotomyReport::Label::dichotomy: return "dichotomy";
    case TrichotomyReport::Label::inconclusive: return "inconclusive";
  }
  return "?";
}

const char* to_string(FailureMode mode) {
  switch (mode) {
    case FailureMode::oscillation: return "oscillation";
    case FailureMode::concentration: return "concentration";
    case FailureMode::vanishing: return "vanishing";
    case FailureMode::unclassified: return "unclassified";
  }
  return "?";
}

void SequenceSpec::validate() const {
  if (indices.empty()) throw ValidationError("SequenceSpec: empty index set");
  for (int n : indices)
    if (n < 1) throw ValidationError("SequenceSpec: indices must be positive");
  if (kind == Kind::custom) {
    if (!custom) throw ValidationError("SequenceSpec: custom kind needs a generator");
  } else {
    if (!base) throw ValidationError("SequenceSpec: base profile required");
    if (!(base_radius > 0.0)) throw ValidationError("SequenceSpec: base_radius must be positive");
  }
  if (!(p >= 1.0)) throw ValidationError("SequenceSpec: p >= 1 required");
}

namespace {

int odd_points(double radius, double per_unit) {
  int m = static_cast<int>(std::ceil(2.0 * radius * per_unit)) + 1;
  if (m % 2 == 0) ++m;
  return std::max(m, 33);
}

} // namespace

GridFunction sequence_term(const SequenceSpec& seq, int n) {
  seq.validate();
  if (seq.kind == SequenceSpec::Kind::custom) return seq.custom(n);

  double box = seq.base_radius;
  switch (seq.kind) {
    case SequenceSpec::Kind::vanishing_translation:
    case SequenceSpec::Kind::dichotomy_pair:
      box = seq.base_radius + double(n) + 1.0;
      break;
    case SequenceSpec::Kind::spreading:
      box = seq.base_radius * double(n) + 1.0;
      break;
    case SequenceSpec::Kind::oscillation:
    case SequenceSpec::Kind::concentration:
      box = seq.base_radius + 1.0;
      break;
    default: break;
  }
  const CartesianGrid g = make_grid(1, box, odd_points(box, seq.points_per_unit));
  GridFunction out(g, FieldKind::real);
  const std::int64_t nn = g.node_count();
  for (std::int64_t j = 0; j < nn; ++j) {
    const double x = g.coord(j)[0];
    double v = 0.0;
    switch (seq.kind) {
      case SequenceSpec::Kind::oscillation:
        v = std::cos(2.0 * M_PI * n * x) * seq.base(std::abs(x));
        break;
      case SequenceSpec::Kind::concentration:
        // mass-preserving in the L^2 sense: n^(1/2) u(n x)
        v = std::sqrt(double(n)) * seq.base(std::abs(n * x));
        break;
      case SequenceSpec::Kind::vanishing_translation:
        v = seq.base(std::abs(x - n));
        break;
      case SequenceSpec::Kind::spreading:
        v = seq.base(std::abs(x / n)) / double(n);
        break;
      case SequenceSpec::Kind::dichotomy_pair:
        v = 0.5 * (seq.base(std::abs(x - n)) + seq.base(std::abs(x + n)));
        break;
      default: break;
    }
    out[j] = v;
  }
  if (!out.all_finite()) throw ValidationError("sequence_term: non-finite term");
  return out;
}

std::vector<double> brezis_lieb_defect(const std::vector<GridFunction>& terms,
                                       const GridFunction& limit, double p) {
  if (!(p >= 1.0)) throw ValidationError("brezis_lieb_defect: p >= 1 required");
  std::vector<double> out;
  out.reserve(terms.size());
  const std::int64_t nn = limit.size();
  const double lim_p = std::pow(norm(limit, NormKind::lp(p)), p);
  for (const auto& un : terms) {
    if (!un.grid().same_layout(limit.grid()))
      throw ValidationError("brezis_lieb_defect: mismatched grids");
    double un_p = 0.0, diff_p = 0.0;
    for (std::int64_t j = 0; j < nn; ++j) {
      const double w = quad_weight(limit.grid(), j);
      un_p += w * std::pow(std::abs(un[j]), p);
      diff_p += w * std::pow(std::abs(un[j] - limit[j]), p);
    }
    out.push_back(std::abs(un_p - diff_p - lim_p));
  }
  return out;
}

ConcentrationProfile concentration_profile(const GridFunction& rho,
                                           const std::vector<double>& radii) {
  const CartesianGrid& g = rho.grid();
  const std::int64_t nn = g.node_count();
  for (std::int64_t j = 0; j < nn; ++j)
    if (rho[j] < -1e-12)
      throw ValidationError("concentration_function: negative density entries");

  ConcentrationProfile out;
  out.Q.reserve(radii.size());
  out.centers.reserve(radii.size());

  if (g.dim == 1) {
    // prefix sums of the weighted samples; window search per radius
    std::vector<double> pre(nn + 1, 0.0);
    for (std::int64_t j = 0; j < nn; ++j)
      pre[j + 1] = pre[j] + quad_weight(g, j) * std::max(0.0, rho[j]);
    for (double R : radii) {
      if (!(R > 0.0)) throw ValidationError("concentration_function: radii must be positive");
      const int halo = static_cast<int>(std::floor(R / g.spacing + 1e-12));
      double best = 0.0;
      std::int64_t best_j = 0;
      for (std::int64_t j = 0; j < nn; ++j) {
        const std::int64_t lo = std::max<std::int64_t>(0, j - halo);
        const std::int64_t hi = std::min<std::int64_t>(nn - 1, j + halo);
        const double m = pre[hi + 1] - pre[lo];
        if (m > best) {
          best = m;
          best_j = j;
        }
      }
      out.Q.push_back(best);
      out.centers.push_back(g.coord(best_j));
    }
    return out;
  }

  for (double R : radii) {
    if (!(R > 0.0)) throw ValidationError("concentration_function: radii must be positive");
    double best = 0.0;
    std::int64_t best_j = 0;
    const double R2 = R * R;
    for (std::int64_t c = 0; c < nn; ++c) {
      const Point yc = g.coord(c);
      double m = 0.0;
      for (std::int64_t j = 0; j < nn; ++j) {
        const Point x = g.coord(j);
        double d2 = 0.0;
        for (int a = 0; a < g.dim; ++a) d2 += (x[a] - yc[a]) * (x[a] - yc[a]);
        if (d2 <= R2) m += quad_weight(g, j) * std::max(0.0, rho[j]);
      }
      if (m > best) {
        best = m;
        best_j = c;
      }
    }
    out.Q.push_back(best);
    out.centers.push_back(g.coord(best_j));
  }
  return out;
}

std::vector<double> concentration_function(const GridFunction& rho,
                                           const std::vector<double>& radii) {
  return concentration_profile(rho, radii).Q;
}

TrichotomyReport lions_classify(const SequenceSpec& seq, const std::vector<double>& R_grid,
                                const std::vector<int>& n_grid) {
  if (R_grid.empty() || n_grid.empty())
    throw ValidationError("lions_classify: empty R or n grid");
  TrichotomyReport rep;
  rep.indices = n_grid;
  rep.radii = R_grid;

  // generate terms, check the constant-mass precondition
  std::vector<GridFunction> terms;
  std::vector<double> masses;
  SequenceSpec s = seq;
  for (int n : n_grid) {
    terms.push_back(sequence_term(s, n));
    masses.push_back(integrate(terms.back()));
  }
  const double mass0 = masses.front();
  for (double m : masses)
    if (std::abs(m - mass0) > 0.01 * std::abs(mass0))
      throw ValidationError("lions_classify: sequence masses vary by more than 1%");
  rep.lambda = mass0;

  std::vector<ConcentrationProfile> profiles;
  for (const auto& t : terms) profiles.push_back(concentration_profile(t, R_grid));
  for (const auto& pr : profiles) rep.Q.push_back(pr.Q);

  const size_t tail_start = n_grid.size() - std::max<size_t>(1, n_grid.size() / 3);

  // vanishing: the largest reachable mass decays below 0.05*lambda
  {
    const auto& qlast = rep.Q.back();
    const double qmax = *std::max_element(qlast.begin(), qlast.end());
    if (qmax < 0.05 * rep.lambda) {
      rep.label = TrichotomyReport::Label::vanishing;
      rep.note = "max_R Q_n(R) below 0.05 lambda at the largest n";
      return rep;
    }
  }

  // compactness: for each eps some uniform R captures (1-eps) lambda over
  // the tail, with the recentering recorded
  {
    bool compact = true;
    for (double epsf : {0.1, 0.05}) {
      bool eps_ok = true;
      for (size_t i = tail_start; i < n_grid.size(); ++i) {
        bool found = false;
        for (size_t rj = 0; rj < R_grid.size(); ++rj)
          if (rep.Q[i][rj] >= (1.0 - epsf) * rep.lambda) {
            found = true;
            break;
          }
        if (!found) {
          eps_ok = false;
          break;
        }
      }
      if (!eps_ok) {
        compact = false;
        break;
      }
    }
    if (compact) {
      rep.label = TrichotomyReport::Label::compactness;
      // centers at the smallest capturing radius of the last term
      for (size_t i = 0; i < n_grid.size(); ++i) {
        size_t rj = R_grid.size() - 1;
        for (size_t k = 0; k < R_grid.size(); ++k)
          if (rep.Q[i][k] >= 0.9 * rep.lambda) {
            rj = k;
            break;
          }
        rep.centers.push_back(profiles[i].centers[rj]);
      }
      rep.note = "uniform capturing radius found for eps in {0.1, 0.05}";
      return rep;
    }
  }

  // dichotomy: a genuine plateau strictly between 0 and lambda at the last
  // index, stable over the tail
  {
    const auto& qlast = rep.Q.back();
    double plateau = -1.0;
    int best_len = 0;
    for (size_t a = 0; a < qlast.size(); ++a) {
      size_t b = a;
      while (b + 1 < qlast.size() &&
             std::abs(qlast[b + 1] - qlast[a]) <= 0.02 * rep.lambda)
        ++b;
      const int len = static_cast<int>(b - a + 1);
      const double level = qlast[a];
      if (len > best_len && level > 0.1 * rep.lambda && level < 0.95 * rep.lambda) {
        best_len = len;
        plateau = level;
      }
      a = b;
    }
    if (plateau > 0.0 && best_len >= 2) {
      rep.label = TrichotomyReport::Label::dichotomy;
      rep.split_mass = plateau;
      rep.note = "Q plateau strictly between 0 and lambda";
      return rep;
    }
  }

  rep.label = TrichotomyReport::Label::inconclusive;
  rep.note = "no rule matched on the sampled range";
  return rep;
}

FailureMode weak_failure_mode(const SequenceSpec& seq) {
  seq.validate();
  const auto& ns = seq.indices;

  std::vector<GridFunction> terms;
  for (int n : ns) terms.push_back(sequence_term(seq, n));

  std::vector<double> l2(ns.size()), linf(ns.size());
  for (size_t i = 0; i < ns.size(); ++i) {
    l2[i] = norm(terms[i], NormKind::l2());
    linf[i] = norm(terms[i], NormKind::linf());
  }
  const double l2_0 = l2.front();
  bool l2_const = true;
  for (double v : l2)
    if (std::abs(v - l2_0) > 0.2 * std::abs(l2_0)) l2_const = false;

  // concentration: the radius capturing 90% of the L^2 mass shrinks to ~0
  {
    std::vector<double> r90(ns.size(), 0.0);
    bool ok = true;
    for (size_t i = 0; i < ns.size(); ++i) {
      const auto& u = terms[i];
      const CartesianGrid& g = u.grid();
      std::vector<std::pair<double, double>> by_r; // (|x|, w u^2)
      for (std::int64_t j = 0; j < g.node_count(); ++j) {
        const double x = std::abs(g.coord(j)[0]);
        by_r.emplace_back(x, quad_weight(g, j) * u[j] * u[j]);
      }
      std::sort(by_r.begin(), by_r.end());
      double total = 0.0;
      for (auto& pr : by_r) total += pr.second;
      if (total <= 0.0) {
        ok = false;
        break;
      }
      double acc = 0.0;
      for (auto& pr : by_r) {
        acc += pr.second;
        if (acc >= 0.9 * total) {
          r90[i] = pr.first;
          break;
        }
      }
    }
    if (ok && r90.front() > 0.0 && r90.back() < 0.35 * r90.front() && l2_const)
      return FailureMode::concentration;
  }

  // vanishing: sup norm roughly constant while the mass in every fixed ball
  // dies
  {
    bool sup_const = true;
    for (double v : linf)
      if (std::abs(v - linf.front()) > 0.2 * std::abs(linf.front())) sup_const = false;
    // mass inside the fixed ball |x| <= base_radius + 1
    std::vector<double> local(ns.size(), 0.0);
    const double R = seq.base_radius + 1.0;
    for (size_t i = 0; i < ns.size(); ++i) {
      const auto& u = terms[i];
      for (std::int64_t j = 0; j < u.grid().node_count(); ++j)
        if (std::abs(u.grid().coord(j)[0]) <= R)
          local[i] += quad_weight(u.grid(), j) * u[j] * u[j];
    }
    if (sup_const && local.front() > 0.0 && local.back() < 0.05 * local.front())
      return FailureMode::vanishing;
  }

  // oscillation: norm constant, local averages die, pointwise values do not
  // settle
  {
    if (l2_const) {
      // local averages against a fixed smooth window
      std::vector<double> avg(ns.size(), 0.0);
      for (size_t i = 0; i < ns.size(); ++i) {
        const auto& u = terms[i];
        for (std::int64_t j = 0; j < u.grid().node_count(); ++j) {
          const double x = u.grid().coord(j)[0];
          const double w = std::exp(-x * x);
          avg[i] += quad_weight(u.grid(), j) * u[j] * w;
        }
      }
      const double a0 = std::abs(avg.front());
      const bool averages_die = a0 < 1e-12 || std::abs(avg.back()) < 0.2 * (a0 + 1e-12);
      // pointwise non-convergence: successive terms stay apart in L^2
      double gap = 1e300;
      for (size_t i = 0; i + 1 < ns.size(); ++i) {
        double d = 0.0;
        const auto& a = terms[i];
        const auto& b = terms[i + 1];
        if (!a.grid().same_layout(b.grid())) continue;
        for (std::int64_t j = 0; j < a.grid().node_count(); ++j)
          d += quad_weight(a.grid(), j) * (a[j] - b[j]) * (a[j] - b[j]);
        gap = std::min(gap, std::sqrt(d));
      }
      if (averages_die && gap > 0.3 * l2_0) return FailureMode::oscillation;
    }
  }

  return FailureMode::unclassified;
}

MassBudget mass_budget(const std::vector<GridFunction>& terms, const GridFunction& limit,
                       double p, const std::vector<double>& R_grid) {
  if (terms.empty() || R_grid.empty())
    throw ValidationError("mass_budget: empty inputs");
  for (const auto& t : terms)
    if (!t.grid().same_layout(limit.grid()))
      throw ValidationError("mass_budget: all terms must share the limit's grid");

  const CartesianGrid& g = limit.grid();
  const std::int64_t nn = g.node_count();
  const size_t tail_start = terms.size() - std::max<size_t>(1, terms.size() / 3);

  // per-term tail masses and norms
  std::vector<std::vector<double>> tails(terms.size(), std::vector<double>(R_grid.size(), 0.0));
  std::vector<double> norm_p(terms.size(), 0.0), diff_p(terms.size(), 0.0);
  for (size_t i = 0; i < terms.size(); ++i) {
    const auto& u = terms[i];
    for (std::int64_t j = 0; j < nn; ++j) {
      const double w = quad_weight(g, j);
      const double au = std::pow(std::abs(u[j]), p);
      norm_p[i] += w * au;
      diff_p[i] += w * std::pow(std::abs(u[j] - limit[j]), p);
      double r = 0.0;
      for (int a = 0; a < g.dim; ++a) r += g.coord(j)[a] * g.coord(j)[a];
      r = std::sqrt(r);
      for (size_t k = 0; k < R_grid.size(); ++k)
        if (r > R_grid[k]) tails[i][k] += w * au;
    }
  }

  const auto tail_max = [&](const std::vector<double>& per_term_value) {
    double m = 0.0;
    for (size_t i = tail_start; i < terms.size(); ++i) m = std::max(m, per_term_value[i]);
    return m;
  };

  // limsup_n of the tail mass per radius, then the R -> infinity limit
  std::vector<double> tail_sup(R_grid.size(), 0.0);
  for (size_t k = 0; k < R_grid.size(); ++k) {
    std::vector<double> col(terms.size());
    for (size_t i = 0; i < terms.size(); ++i) col[i] = tails[i][k];
    tail_sup[k] = tail_max(col);
  }

  MassBudget out;
  out.nu_infinity_est = tail_sup.back();
  for (size_t k = 0; k + 1 < R_grid.size(); ++k)
    if (tail_sup[k + 1] > tail_sup[k] + 1e-12 * (1.0 + tail_sup[k])) {
      out.flagged = true;
      out.error_bar = std::max(out.error_bar, tail_sup[k + 1] - tail_sup[k]);
    }

  const double limsup_diff = tail_max(diff_p);
  const double limsup_norm = tail_max(norm_p);
  double lim_p = 0.0;
  for (std::int64_t j = 0; j < nn; ++j)
    lim_p += quad_weight(g, j) * std::pow(std::abs(limit[j]), p);

  out.nu_norm_est = std::max(0.0, limsup_diff - out.nu_infinity_est);
  out.budget_residual =
      std::abs(limsup_norm - (lim_p + out.nu_norm_est + out.nu_infinity_est));
  return out;
}

} // namespace concentra
