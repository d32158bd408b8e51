#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vp/phase_space.hpp"
#include "vp/vec3.hpp"

namespace vp {

struct Interval {
  double lo = 0.0, hi = 0.0;
  bool nonempty() const { return lo < hi; }
  bool contains(double x) const { return x > lo && x < hi; }
  double midpoint() const { return 0.5 * (lo + hi); }
};

enum class Regime { Direct, Iterated };

/// Admissible parameter intervals for a given spatial decay exponent.
/// Direct regime when beta = 1 - epsilon < 6/19, Iterated otherwise.
struct ParamRanges {
  double epsilon = 0.0;
  double beta = 0.0;
  Regime regime = Regime::Direct;
  Interval gamma;   // Direct: (4b/3, (2-b)/4); Iterated: (max{0, b-2/3+d}, (2-b)/4)
  Interval alpha;   // ((5-eps)/9, 2/3)
  Interval delta;   // Iterated only: (0, 7/6 - 5b/4)
  // eta depends on the chosen gamma (and delta in the iterated regime)
  Interval eta_interval(double gamma_choice, double delta_choice = 0.0) const;
};

ParamRanges param_ranges(double epsilon);

struct ParamBundle {
  double epsilon = 0.0, beta = 0.0;
  double gamma = 0.0, eta = 0.0, delta = 0.0, alpha = 0.0;
  Regime regime = Regime::Direct;
  double p_ref = 0.0;  // P, the recorded max speed over [0,T]
  double q_ref = 0.0;  // Q, the recorded sup local energy
  double c2 = 0.0;     // measured field-bound constant

  void validate() const;  // all chosen parameters inside their intervals
};

struct Schedule {
  double delta_1 = 0.0;        // base averaging window
  long g_factor = 1;           // floor(P^delta)
  std::vector<double> deltas;  // Delta_ell, ell = 1..ell_bar
  int ell_bar = 1;
  std::vector<std::string> warnings;
};

/// Base window 1/(4 C2 P^(4/3-gamma) Q^(1/3)), geometric ladder with ratio
/// floor(P^delta), and the smallest depth at which the averaged-field exponent
/// drops below 2/3.
Schedule make_schedule(double p, double q, double c2, double gamma, double delta,
                       double beta, double eta, std::optional<double> horizon = {});

/// Exponent-arithmetic check of the three ladder bounds a_i Delta_ell <= P^theta,
/// theta < gamma, for every ell <= ell_bar. Returns the failing (term, ell) pairs.
std::vector<std::pair<int, int>> ladder_violations(const ParamBundle& b, int ell_bar);

struct LatticeSumReport {
  struct Row {
    double radius = 0.0;
    double sum = 0.0;          // S(R) = sum over 1 < |i| <= 5R of |i|^-(2+eps)
    double envelope_ratio = 0.0;  // S(R) / R^(1-eps)
  };
  std::vector<Row> rows;
  struct MuRow {
    Vec3 mu;
    double sum = 0.0;        // sum over |i|>=1, |mu-i|>=1 of 1/(|mu-i|^2 |i|^(2+eps))
    double split_bound = 0.0;  // S1 + S2 of the index split
    double tail_bound = 0.0;   // bound on the truncated remainder
  };
  std::vector<MuRow> mu_rows;
  double potential_sup = 0.0;  // sup over samples of int g(|y|)/|x-y| dy (power-law g)
};

/// Direct lattice enumeration with exact integer norms; truncation remainders are
/// covered by an integral tail bound.
LatticeSumReport lattice_sum_audit(double epsilon, const std::vector<double>& radii,
                                   const std::vector<Vec3>& mu_samples);

/// Tail sum bound: sum over |i| > L of |i|^-s, s > 3.
double lattice_tail_bound(double s, double l);

/// a_i = sqrt(2 (2+eps) log|i| / lambda_bar), the velocity split radius at site |i|.
double velocity_tail_radius(double epsilon, double lambda_bar, double site_norm);

struct ConvexityViolation {
  double r = 0.0, a = 0.0, lhs = 0.0, rhs = 0.0;
};

/// Checks r(|log r|+1) <= r|log a| + a over samples in (0,1)^2.
std::vector<ConvexityViolation> convexity_bound_check(
    const std::vector<std::pair<double, double>>& samples);

/// Lattice-decay certificate for a profile: max over audited sites of
/// (unit-ball mass of g) * |i|^(2+eps), by midpoint quadrature.
double profile_lattice_c1(const DecayProfile& profile, double epsilon,
                          double max_radius, double h = 0.25);

}  // namespace vp
