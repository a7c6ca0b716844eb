#ifndef CONCENTRA_DIAGNOSTICS_HPP
#define CONCENTRA_DIAGNOSTICS_HPP

#include <functional>
#include <string>
#include <vector>

#include "concentra/grid.hpp"

namespace concentra {

/// Generator of the canonical weak-convergence test sequences of
/// concentration-compactness analysis.  Mass-type sequences (used by
/// lions_classify) are built from the nonnegative base profile; amplitude
/// sequences (weak_failure_mode) from the signed one.
struct SequenceSpec {
  enum class Kind {
    oscillation,            // u_n(x) = cos(2 pi n x) chi(x)
    concentration,          // u_n(x) = n^(1/2) u(n x)
    vanishing_translation,  // u_n(x) = u(x - n)
    spreading,              // rho_n(x) = n^(-1) rho(x/n)
    dichotomy_pair,         // rho_n = (rho(x-n) + rho(x+n))/2
    custom
  };
  Kind kind = Kind::vanishing_translation;
  std::vector<int> indices;  // the n values of the sequence
  double p = 2.0;            // exponent for the L^p bookkeeping
  std::function<double(double)> base;  // radial base profile, support in [0, base_radius]
  double base_radius = 1.0;
  double points_per_unit = 16.0;  // grid resolution of the generated terms
  std::function<GridFunction(int)> custom;  // kind == custom

  void validate() const;
};

/// Term u_n (or rho_n) on its own grid, sized to contain the support:
/// box radius = base radius + the shift of index n (scaled for spreading).
GridFunction sequence_term(const SequenceSpec& seq, int n);

/// Brezis-Lieb defects d_n = | ||u_n||_p^p - ||u_n - u||_p^p - ||u||_p^p |.
std::vector<double> brezis_lieb_defect(const std::vector<GridFunction>& terms,
                                       const GridFunction& limit, double p);

/// Lions concentration function Q(R) = max over grid-node centers y of
/// the mass of rho in B(y, R).
std::vector<double> concentration_function(const GridFunction& rho,
                                           const std::vector<double>& radii);

/// Q(R) together with the maximizing centers.
struct ConcentrationProfile {
  std::vector<double> Q;
  std::vector<Point> centers;
};
ConcentrationProfile concentration_profile(const GridFunction& rho,
                                           const std::vector<double>& radii);

struct TrichotomyReport {
  enum class Label { compactness, vanishing, dichotomy, inconclusive };
  Label label = Label::inconclusive;
  double lambda = 0.0;                  // common mass of the sequence
  std::vector<int> indices;             // n grid
  std::vector<double> radii;            // R grid
  std::vector<std::vector<double>> Q;   // Q[i][j] = Q_{n_i}(R_j)
  std::vector<Point> centers;           // recentering sequence (compactness)
  double split_mass = 0.0;              // alpha estimate (dichotomy)
  std::string note;
};

const char* to_string(TrichotomyReport::Label label);

/// Lions trichotomy decision on the sampled Q_n(R) table; emits an explicit
/// `inconclusive` label instead of guessing when the rules conflict.
TrichotomyReport lions_classify(const SequenceSpec& seq, const std::vector<double>& R_grid,
                                const std::vector<int>& n_grid);

enum class FailureMode { oscillation, concentration, vanishing, unclassified };
const char* to_string(FailureMode mode);

/// Classifies the canonical weak-convergence failure of the sequence.
FailureMode weak_failure_mode(const SequenceSpec& seq);

struct MassBudget {
  double nu_norm_est = 0.0;       // mass concentrating at finite points
  double nu_infinity_est = 0.0;   // mass escaping to infinity
  double budget_residual = 0.0;   // defect of the budget identity
  bool flagged = false;           // non-monotone tail estimates
  double error_bar = 0.0;
};

/// nu_infinity / ||nu|| estimates from the double limit over the sampled
/// R and n grids; all terms must share the limit's grid.
MassBudget mass_budget(const std::vector<GridFunction>& terms, const GridFunction& limit,
                       double p, const std::vector<double>& R_grid);

} // namespace concentra

#endif
