#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "vp/field.hpp"
#include "vp/phase_space.hpp"
#include "vp/vec3.hpp"

namespace vp {

/// Radial cutoff: 1 on [0,1], 0 on [2,inf), quintic smoothstep bridge in between.
/// Slope stays in [-15/8, 0], inside the admissible [-2, 0] band.
double mollifier_eval(double r);
double mollifier_deriv(double r);

struct EnergyReport {
  Vec3 mu;
  double r = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double total = 0.0;
};

/// Particle estimator of the local energy around mu at scale r:
///   kinetic   = 1/2 sum_i w_i phi(|x_i-mu|/r) |v_i|^2
///   potential = 1/2 sum_i sum_{j!=i} w_i w_j phi(|x_i-mu|/r) / sqrt(|x_i-x_j|^2 + ds^2)
EnergyReport local_energy(const Ensemble& state, const Vec3& mu, double r,
                          const Softening& soft);

struct QSupResult {
  double value = 0.0;
  Vec3 argmax;
  double spacing = 0.0;
  std::size_t grid_points = 0;
};

/// Grid maximum of the local energy over mu-points covering the bounding box inflated
/// by 2r. A certified lower bound of the true sup; refinement never decreases it.
QSupResult q_sup(const Ensemble& state, double r, double mu_grid_spacing,
                 const Softening& soft);

/// Sum over particles with 1 <= |x_i-mu| <= r of w_i/|x_i-mu|^2.
double shell_integral(const Ensemble& state, const Vec3& mu, double r);

/// Sum over particles with |x_i-mu| >= 3*r_n of w_i/|x_i-mu|^2.
double far_integral(const Ensemble& state, const Vec3& mu, double r_n);

struct GridCell {
  double weight = 0.0;   // sum of particle weights
  double kinetic = 0.0;  // 1/2 sum w |v|^2
};

struct DensityGrid {
  double h_rho = 1.0;
  std::map<std::array<long, 3>, GridCell> cells;
  double sup_density = 0.0;    // max cell weight / h^3
  double moment_53 = 0.0;      // sum over cells of (w/h^3)^(5/3) h^3
  double total_weight = 0.0;
  // unit-ball particle masses around integer lattice sites, keyed by site
  std::map<std::array<long, 3>, double> lattice_masses;
};

DensityGrid density_grid(const Ensemble& state, double h_rho);

/// Sharp constant in rho^(5/3) <= c_int * k, with k the kinetic density carrying the
/// conventional 1/2 factor, derived from minimizing c a^3 + k/a^2 over a with
/// c = (4 pi / 3) ||f0||_inf.
double interpolation_constant(double f_inf);

struct InterpolationViolation {
  std::array<long, 3> cell;
  double lhs = 0.0, rhs = 0.0;
};

/// Cell-wise check of rho^(5/3) <= c_int * k over a density grid.
std::vector<InterpolationViolation> interpolation_check(const DensityGrid& grid,
                                                        double f_inf,
                                                        double slack = 1e-9);

struct VelocityShellCensus {
  int m = 0;                      // dyadic band count, floor((1-gamma) log2 P)
  double b1_weight = 0.0;         // weight with |v - v_ref| <= P^gamma
  std::size_t b1_count = 0;
  std::vector<double> alpha;      // alpha_k = P / 2^k, k = 0..m+1
  std::vector<double> l;          // l_k = 2^(3k) Q^(1/3) / P^(4/3+eta)
  std::vector<double> band_weight;  // weight in (alpha_{k+1}, alpha_k]
  std::vector<std::size_t> band_count;
  double overflow_weight = 0.0;   // |v - v_ref| > alpha_0 = P
};

VelocityShellCensus dyadic_shell_census(const Ensemble& state, const Vec3& v_ref, double p,
                                        double q, double gamma, double eta);

/// Volume bound behind the band estimate: band weight <= norm * (4 pi / 3) alpha_k^3.
/// norm is f_inf times the spatial volume the ensemble occupies.
std::vector<int> census_band_violations(const VelocityShellCensus& census, double norm,
                                        double slack = 0.05);

/// Discrete counterpart of the nested-average bound: the mean over G*len consecutive
/// samples never exceeds the max of the G sub-means over len samples.
bool nested_average_identity(const std::vector<double>& series, int g, int len);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of residuals
};

LinearFit fit_linear(const std::vector<double>& xs, const std::vector<double>& ys);
/// Least squares on (log x, log y).
LinearFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace vp
