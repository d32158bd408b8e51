#include "vp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace vp {

namespace {

struct Sim {
  std::vector<Vec3> pos, vel, acc;
  std::vector<double> w, emag, work;
  double total_w = 0.0;
  FieldMethod method;
  Softening soft;

  explicit Sim(const Ensemble& ens, const FieldMethod& m, const Softening& s)
      : method(m), soft(s) {
    soft.validate();
    const std::size_t n = ens.particles.size();
    pos.resize(n);
    vel.resize(n);
    acc.assign(n, {});
    w.resize(n);
    emag.assign(n, 0.0);
    work.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      pos[i] = ens.particles[i].pos;
      vel[i] = ens.particles[i].vel;
      w[i] = ens.particles[i].weight;
      total_w += w[i];
    }
    if (total_w > 0.0 && !(soft.delta_s > 0.0))
      throw std::invalid_argument("self-consistent runs need positive softening");
  }

  void eval_accel(double t) {
    if (total_w <= 0.0) {
      std::fill(acc.begin(), acc.end(), Vec3{});
      std::fill(emag.begin(), emag.end(), 0.0);
      return;
    }
    const auto samples = eval_field(pos, w, pos, method, soft);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      if (!samples[i].field.finite())
        throw std::runtime_error("non-finite field at particle " + std::to_string(i) +
                                 ", t = " + std::to_string(t));
      acc[i] = samples[i].field;
      emag[i] = samples[i].magnitude;
    }
  }

  double max_speed() const {
    double m = 0.0;
    for (const auto& v : vel) m = std::max(m, v.norm());
    return m;
  }
};

struct Recorder {
  TrajectorySet& out;
  const IntegrateOptions& opts;
  int n_steps;

  void init(const Sim& sim) {
    out.c_tilde = opts.c_tilde;
    out.tracked_ids = opts.tracked_ids;
    for (int id : out.tracked_ids)
      if (id < 0 || id >= static_cast<int>(sim.pos.size()))
        throw std::invalid_argument("tracked id out of range");
    out.tracked_pos.resize(out.tracked_ids.size());
    out.tracked_vel.resize(out.tracked_ids.size());
  }

  void record(const Sim& sim, int step, double t, double dt) {
    out.times.push_back(t);
    const double v = std::max(sim.max_speed(), opts.c_tilde);
    const double vprev = out.vmax.empty() ? v : out.vmax.back();
    out.vmax.push_back(std::max(vprev, v));
    if (out.radius.empty())
      out.radius.push_back(1.0);
    else
      out.radius.push_back(out.radius.back() + 0.5 * (vprev + out.vmax.back()) * dt);
    double esup = 0.0, wsup = 0.0;
    for (std::size_t i = 0; i < sim.emag.size(); ++i) {
      esup = std::max(esup, sim.emag[i]);
      wsup = std::max(wsup, sim.work[i]);
    }
    out.field_sup.push_back(esup);
    out.work_sup.push_back(wsup);
    for (std::size_t k = 0; k < out.tracked_ids.size(); ++k) {
      out.tracked_pos[k].push_back(sim.pos[out.tracked_ids[k]]);
      out.tracked_vel[k].push_back(sim.vel[out.tracked_ids[k]]);
    }
    const bool snap = step == 0 || step == n_steps ||
                      (opts.snapshot_stride > 0 && step % opts.snapshot_stride == 0);
    if (snap) {
      out.snap_times.push_back(t);
      out.snap_pos.push_back(sim.pos);
      out.snap_vel.push_back(sim.vel);
      out.snap_field.push_back(sim.emag);
      out.snap_work.push_back(sim.work);
    }
  }

  void finish(const Sim& sim, const Ensemble& ens) {
    out.work = sim.work;
    out.final_state.resize(sim.pos.size());
    for (std::size_t i = 0; i < sim.pos.size(); ++i)
      out.final_state[i] = {sim.pos[i], sim.vel[i], ens.particles[i].weight};
  }
};

int step_count(double t_final, double dt) {
  if (!(t_final > 0.0)) throw std::invalid_argument("t_final must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  return std::max(1, static_cast<int>(std::llround(t_final / dt)));
}

/// One Verlet step; emag holds |E| at the pre-step positions on entry and at the
/// post-step positions on exit; per-particle work accumulates by trapezoid.
void verlet_step(Sim& sim, double t, double dt, const DtPolicy& policy) {
  const double guard = policy.guard_frac > 0.0 && sim.soft.delta_s > 0.0
                           ? policy.guard_frac * sim.soft.delta_s
                           : 0.0;
  std::vector<double> emag_old = sim.emag;
  for (std::size_t i = 0; i < sim.pos.size(); ++i) {
    const Vec3 dx = dt * sim.vel[i] + (0.5 * dt * dt) * sim.acc[i];
    if (guard > 0.0 && dx.norm() > guard)
      throw std::runtime_error("step rejected: particle " + std::to_string(i) + " moved " +
                               std::to_string(dx.norm()) + " > " + std::to_string(guard) +
                               " at t = " + std::to_string(t) + "; reduce dt");
    sim.pos[i] += dx;
  }
  std::vector<Vec3> acc_old = sim.acc;
  sim.eval_accel(t + dt);
  for (std::size_t i = 0; i < sim.pos.size(); ++i) {
    sim.vel[i] += 0.5 * dt * (acc_old[i] + sim.acc[i]);
    sim.work[i] += 0.5 * dt * (emag_old[i] + sim.emag[i]);
    if (!sim.pos[i].finite() || !sim.vel[i].finite())
      throw std::runtime_error("non-finite state at particle " + std::to_string(i) +
                               ", t = " + std::to_string(t + dt));
  }
}

}  // namespace

TrajectorySet integrate(const Ensemble& ens, double t_final, const DtPolicy& policy,
                        const FieldMethod& method, const Softening& soft,
                        const IntegrateOptions& opts) {
  if (ens.particles.empty()) throw std::invalid_argument("empty ensemble");
  const int n_steps = step_count(t_final, policy.dt);
  const double dt = t_final / n_steps;

  TrajectorySet out;
  Sim sim(ens, method, soft);
  Recorder rec{out, opts, n_steps};
  rec.init(sim);
  sim.eval_accel(0.0);
  rec.record(sim, 0, 0.0, dt);
  for (int s = 0; s < n_steps; ++s) {
    verlet_step(sim, s * dt, dt, policy);
    rec.record(sim, s + 1, (s + 1) * dt, dt);
  }
  rec.finish(sim, ens);
  return out;
}

CoupledRun coupled_integrate(const Ensemble& base, int n, double t_final,
                             const DtPolicy& policy, const FieldMethod& method,
                             const Softening& soft, const IntegrateOptions& opts) {
  if (base.cutoff_n < n + 1)
    throw std::invalid_argument("base cutoff must cover n+1");
  const Ensemble lo = apply_cutoff(base, n);
  const Ensemble hi = apply_cutoff(base, n + 1);
  if (lo.particles.empty()) throw std::invalid_argument("empty low-cutoff ensemble");
  CoupledRun run;
  run.shared_count = lo.particles.size();
  for (std::size_t i = 0; i < run.shared_count; ++i) {
    const auto& a = lo.particles[i];
    const auto& b = hi.particles[i];
    if ((a.pos - b.pos).norm2() != 0.0 || (a.vel - b.vel).norm2() != 0.0 ||
        a.weight != b.weight)
      throw std::logic_error("ensembles are not nested: particle order mismatch at " +
                             std::to_string(i));
  }

  const int n_steps = step_count(t_final, policy.dt);
  const double dt = t_final / n_steps;
  Sim sa(lo, method, soft), sb(hi, method, soft);
  Recorder ra{run.traj_lo, opts, n_steps}, rb{run.traj_hi, opts, n_steps};
  ra.init(sa);
  rb.init(sb);
  auto gaps = [&run, &sa, &sb] {
    double d = 0.0, e = 0.0;
    for (std::size_t i = 0; i < run.shared_count; ++i) {
      d = std::max(d, (sa.pos[i] - sb.pos[i]).norm());
      e = std::max(e, (sa.vel[i] - sb.vel[i]).norm());
    }
    run.delta_series.push_back(d);
    run.eta_series.push_back(e);
    run.sigma_series.push_back(std::max(d, e));
    run.sup_sigma = std::max(run.sup_sigma, std::max(d, e));
  };
  sa.eval_accel(0.0);
  sb.eval_accel(0.0);
  ra.record(sa, 0, 0.0, dt);
  rb.record(sb, 0, 0.0, dt);
  gaps();
  for (int s = 0; s < n_steps; ++s) {
    verlet_step(sa, s * dt, dt, policy);
    verlet_step(sb, s * dt, dt, policy);
    ra.record(sa, s + 1, (s + 1) * dt, dt);
    rb.record(sb, s + 1, (s + 1) * dt, dt);
    gaps();
  }
  ra.finish(sa, lo);
  rb.finish(sb, hi);
  return run;
}

SeparationReport separation_check(const TrajectorySet& traj,
                                  std::span<const std::pair<int, int>> pair_ids,
                                  double gamma, double t_start, double delta) {
  if (traj.times.empty()) throw std::invalid_argument("empty trajectory");
  const double t_end = t_start + delta;
  if (t_start < traj.times.front() - 1e-12 || t_end > traj.times.back() + 1e-12)
    throw std::invalid_argument("window exceeds recorded times");
  auto track_of = [&](int id) {
    for (std::size_t k = 0; k < traj.tracked_ids.size(); ++k)
      if (traj.tracked_ids[k] == id) return k;
    throw std::invalid_argument("particle " + std::to_string(id) + " is not tracked");
  };
  std::vector<std::size_t> steps;
  for (std::size_t s = 0; s < traj.times.size(); ++s)
    if (traj.times[s] >= t_start - 1e-12 && traj.times[s] <= t_end + 1e-12)
      steps.push_back(s);
  if (steps.empty()) throw std::invalid_argument("window contains no recorded step");

  SeparationReport rep;
  rep.p_gamma = std::pow(traj.vmax.back(), gamma);
  const double slack = 1e-12 * std::max(1.0, rep.p_gamma);
  for (const auto& [ia, ib] : pair_ids) {
    const std::size_t ka = track_of(ia), kb = track_of(ib);
    PairSeparation p;
    p.id_a = ia;
    p.id_b = ib;
    p.dv_start =
        (traj.tracked_vel[ka][steps.front()] - traj.tracked_vel[kb][steps.front()]).norm();
    p.gap_pair = p.dv_start >= rep.p_gamma;
    p.inf_gap = p.sup_gap =
        (traj.tracked_vel[ka][steps.front()] - traj.tracked_vel[kb][steps.front()]).norm();
    double min_dx = std::numeric_limits<double>::infinity();
    std::size_t s0 = steps.front();
    for (std::size_t s : steps) {
      const double g = (traj.tracked_vel[ka][s] - traj.tracked_vel[kb][s]).norm();
      p.inf_gap = std::min(p.inf_gap, g);
      p.sup_gap = std::max(p.sup_gap, g);
      const double dx = (traj.tracked_pos[ka][s] - traj.tracked_pos[kb][s]).norm();
      if (dx < min_dx) {  // strict: ties keep the earliest time
        min_dx = dx;
        s0 = s;
      }
    }
    if (p.gap_pair) {
      p.t0 = traj.times[s0];
      p.min_margin = std::numeric_limits<double>::infinity();
      for (std::size_t s : steps) {
        const double dx = (traj.tracked_pos[ka][s] - traj.tracked_pos[kb][s]).norm();
        const double bound = 0.25 * rep.p_gamma * std::abs(traj.times[s] - p.t0);
        p.min_margin = std::min(p.min_margin, dx - bound);
      }
      p.violation = p.inf_gap < 0.5 * rep.p_gamma - slack || p.min_margin < -slack;
    } else {
      p.min_margin = 2.0 * rep.p_gamma - p.sup_gap;
      p.violation = p.sup_gap > 2.0 * rep.p_gamma + slack;
    }
    if (p.violation) ++rep.violations;
    rep.pairs.push_back(p);
  }
  return rep;
}

FieldWork field_work(const TrajectorySet& traj) {
  if (traj.work.size() != traj.final_state.size())
    throw std::invalid_argument("trajectory has no recorded work series");
  FieldWork fw;
  fw.per_particle = traj.work;
  for (double w : fw.per_particle) fw.sup = std::max(fw.sup, w);
  return fw;
}

double time_average_field(const TrajectorySet& traj, double window_start, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("window length must be positive");
  const double t_end = window_start + delta;
  if (window_start < traj.times.front() - 1e-12 || t_end > traj.times.back() + 1e-12)
    throw std::invalid_argument("window out of recorded range");
  // piecewise-linear |E| series integrated exactly over the clipped window
  double integral = 0.0;
  for (std::size_t s = 0; s + 1 < traj.times.size(); ++s) {
    const double a = std::max(traj.times[s], window_start);
    const double b = std::min(traj.times[s + 1], t_end);
    if (b <= a) continue;
    const double span = traj.times[s + 1] - traj.times[s];
    auto at = [&](double t) {
      const double u = span > 0.0 ? (t - traj.times[s]) / span : 0.0;
      return (1.0 - u) * traj.field_sup[s] + u * traj.field_sup[s + 1];
    };
    integral += 0.5 * (at(a) + at(b)) * (b - a);
  }
  return integral / delta;
}

}  // namespace vp
