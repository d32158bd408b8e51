#pragma once

#include <span>
#include <utility>
#include <vector>

#include "vp/field.hpp"
#include "vp/phase_space.hpp"
#include "vp/vec3.hpp"

namespace vp {

struct DtPolicy {
  double dt = 1e-2;
  // per-step displacement cap as a fraction of the softening length; 0 disables
  double guard_frac = 0.25;
};

struct IntegrateOptions {
  int snapshot_stride = 0;  // 0: first and last step only
  double c_tilde = 2.0;     // floor for the running max speed
  std::vector<int> tracked_ids;  // particles recorded at every step
};

/// Per-step scalar series plus coarse per-particle snapshots of one run. Tracked
/// particles keep full per-step position/velocity series for pair checks.
struct TrajectorySet {
  std::vector<double> times;      // step boundaries, times[0] = 0
  std::vector<double> vmax;       // running max speed over particles and past steps, floored
  std::vector<double> radius;     // 1 + trapezoid integral of vmax
  std::vector<double> field_sup;  // max |E| over particles at each step
  std::vector<double> work_sup;   // max over particles of cumulative int |E| ds
  double c_tilde = 2.0;

  std::vector<Particle> final_state;
  std::vector<double> work;  // per-particle int_0^T |E(X(s),s)| ds

  std::vector<double> snap_times;
  std::vector<std::vector<Vec3>> snap_pos;
  std::vector<std::vector<Vec3>> snap_vel;
  std::vector<std::vector<double>> snap_field;  // |E| per particle
  std::vector<std::vector<double>> snap_work;   // cumulative work per particle

  std::vector<int> tracked_ids;
  std::vector<std::vector<Vec3>> tracked_pos;  // [track][step]
  std::vector<std::vector<Vec3>> tracked_vel;
};

/// Velocity-Verlet advance of the characteristics under the self-consistent softened
/// field, recomputed every step. Weights never change. Positive softening is required
/// whenever the ensemble carries weight (the self term is otherwise singular).
TrajectorySet integrate(const Ensemble& ens, double t_final, const DtPolicy& policy,
                        const FieldMethod& method, const Softening& soft,
                        const IntegrateOptions& opts = {});

struct CoupledRun {
  TrajectorySet traj_lo;  // cutoff n
  TrajectorySet traj_hi;  // cutoff n+1
  std::size_t shared_count = 0;
  std::vector<double> delta_series;  // max position gap over shared particles
  std::vector<double> eta_series;    // max velocity gap
  std::vector<double> sigma_series;  // max of the two
  double sup_sigma = 0.0;
};

/// Locksteps the n and n+1 cutoff flows from nested ensembles on one dt schedule.
CoupledRun coupled_integrate(const Ensemble& base, int n, double t_final,
                             const DtPolicy& policy, const FieldMethod& method,
                             const Softening& soft, const IntegrateOptions& opts = {});

struct PairSeparation {
  int id_a = 0, id_b = 0;
  double dv_start = 0.0;  // |dV| at the window start
  bool gap_pair = false;  // dv_start >= P^gamma
  double inf_gap = 0.0, sup_gap = 0.0;  // velocity-gap extremes over the window
  double t0 = 0.0;        // recorded-time argmin of |dX| (gap pairs), ties earliest
  double min_margin = 0.0;  // min over steps of |dX| - (P^gamma/4)|t - t0|
  bool violation = false;
};

struct SeparationReport {
  std::vector<PairSeparation> pairs;
  int violations = 0;
  double p_gamma = 0.0;  // P^gamma with P = recorded final vmax
};

/// Over [t_start, t_start+delta]: pairs opening with |dV| >= P^gamma must keep
/// |dV| >= P^gamma/2 throughout and satisfy |dX(t)| >= (P^gamma/4)|t - t0|;
/// pairs opening with |dV| <= P^gamma must stay <= 2 P^gamma. Pair ids must be tracked.
SeparationReport separation_check(const TrajectorySet& traj,
                                  std::span<const std::pair<int, int>> pair_ids,
                                  double gamma, double t_start, double delta);

struct FieldWork {
  std::vector<double> per_particle;  // final cumulative integrals
  double sup = 0.0;
};

FieldWork field_work(const TrajectorySet& traj);

/// Windowed average (1/delta) int |E| over [window_start, window_start+delta] of the
/// recorded field_sup series, trapezoid with interpolated endpoints.
double time_average_field(const TrajectorySet& traj, double window_start, double delta);

}  // namespace vp
