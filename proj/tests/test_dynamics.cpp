#include <cmath>

#include "doctest.h"
#include "vp/dynamics.hpp"

using namespace vp;

namespace {

Ensemble free_pair(const Vec3& xa, const Vec3& va, const Vec3& xb, const Vec3& vb) {
  Ensemble e;
  e.cutoff_n = 100;
  e.particles.push_back({xa, va, 0.0});
  e.particles.push_back({xb, vb, 0.0});
  return e;
}

double two_body_energy(const std::vector<Particle>& ps, double delta_s) {
  double k = 0.0;
  for (const auto& p : ps) k += 0.5 * p.weight * p.vel.norm2();
  const double r2 = (ps[0].pos - ps[1].pos).norm2();
  return k + ps[0].weight * ps[1].weight / std::sqrt(r2 + delta_s * delta_s);
}

}  // namespace

TEST_CASE("free streaming is exact") {
  Ensemble e;
  e.particles.push_back({{0, 0, 0}, {1, 0, 0}, 0.0});
  // dt = 1/4 is exactly representable, so the streaming sum carries no round-off
  const auto traj = integrate(e, 2.0, {0.25, 0.25}, FieldMethod::direct(), Softening{0.0});
  CHECK(traj.final_state[0].pos.x == 2.0);
  CHECK(traj.final_state[0].pos.y == 0.0);
  CHECK(traj.final_state[0].vel.x == 1.0);
  CHECK(traj.field_sup.back() == 0.0);
  CHECK(traj.work_sup.back() == 0.0);
}

TEST_CASE("two-body energy drift below 1e-6 and oracle agreement") {
  Ensemble e;
  e.particles.push_back({{-0.5, 0, 0}, {0, 0, 0}, 1.0});
  e.particles.push_back({{0.5, 0, 0}, {0, 0, 0}, 1.0});
  const double ds = 0.1;
  const auto traj = integrate(e, 1.0, {1e-3, 0.25}, FieldMethod::direct(), Softening{ds});
  const double e0 = two_body_energy(e.particles, ds);
  const double e1 = two_body_energy(traj.final_state, ds);
  CHECK(std::abs(e1 - e0) / e0 <= 1e-6);

  // independent RK4 of the same reduced ODE: x'' = 2x/(4x^2+ds^2)^(3/2), x(0)=0.5
  double x = 0.5, v = 0.0;
  const double h = 1e-5;
  auto acc = [ds](double xx) {
    const double r2 = 4.0 * xx * xx + ds * ds;
    return 2.0 * xx / (r2 * std::sqrt(r2));
  };
  for (int i = 0; i < 100000; ++i) {
    const double k1x = v, k1v = acc(x);
    const double k2x = v + 0.5 * h * k1v, k2v = acc(x + 0.5 * h * k1x);
    const double k3x = v + 0.5 * h * k2v, k3v = acc(x + 0.5 * h * k2x);
    const double k4x = v + h * k3v, k4v = acc(x + h * k3x);
    x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  CHECK(traj.final_state[1].pos.x == doctest::Approx(x).epsilon(1e-6));
  CHECK(traj.final_state[1].vel.x == doctest::Approx(v).epsilon(1e-6));
}

TEST_CASE("velocity negation reverses the flow to 1e-9") {
  Ensemble e;
  e.cutoff_n = 4;
  for (int i = 0; i < 8; ++i) {
    const double a = i * 0.7853981633974483;
    e.particles.push_back(
        {{std::cos(a), std::sin(a), 0.1 * i}, {0.1 * std::sin(a), -0.1 * std::cos(a), 0.0},
         0.5});
  }
  const auto fwd = integrate(e, 0.5, {0.01, 0.25}, FieldMethod::direct(), Softening{0.2});
  Ensemble back = e;
  back.particles = fwd.final_state;
  for (auto& p : back.particles) p.vel = -1.0 * p.vel;
  const auto rev = integrate(back, 0.5, {0.01, 0.25}, FieldMethod::direct(), Softening{0.2});
  for (std::size_t i = 0; i < e.particles.size(); ++i)
    CHECK((rev.final_state[i].pos - e.particles[i].pos).norm() <= 1e-9);
}

TEST_CASE("weights are conserved along the flow") {
  Ensemble e;
  e.particles.push_back({{-0.5, 0, 0}, {0.2, 0, 0}, 0.3});
  e.particles.push_back({{0.5, 0, 0}, {0, 0.1, 0}, 0.7});
  const auto traj = integrate(e, 0.3, {0.01, 0.25}, FieldMethod::direct(), Softening{0.1});
  CHECK(traj.final_state[0].weight == 0.3);
  CHECK(traj.final_state[1].weight == 0.7);
}

TEST_CASE("recorded series respect the running-max floor and radius law") {
  Ensemble e;
  e.particles.push_back({{0, 0, 0}, {0.5, 0, 0}, 0.0});  // slower than the floor
  IntegrateOptions opts;
  opts.c_tilde = 2.0;
  const auto traj = integrate(e, 1.0, {0.1, 0.25}, FieldMethod::direct(), Softening{0.0}, opts);
  REQUIRE(traj.times.front() == 0.0);
  for (std::size_t i = 0; i + 1 < traj.times.size(); ++i) {
    CHECK(traj.times[i] < traj.times[i + 1]);
    CHECK(traj.vmax[i] <= traj.vmax[i + 1]);
  }
  for (double v : traj.vmax) CHECK(v >= 2.0);
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    CHECK(traj.radius[i] >= 1.0 + 2.0 * traj.times[i] - 1e-12);
}

TEST_CASE("oversized steps are rejected by the displacement guard") {
  Ensemble e;
  e.particles.push_back({{-0.5, 0, 0}, {10, 0, 0}, 1.0});
  e.particles.push_back({{0.5, 0, 0}, {0, 0, 0}, 1.0});
  CHECK_THROWS_AS(integrate(e, 1.0, {0.1, 0.25}, FieldMethod::direct(), Softening{0.1}),
                  std::runtime_error);
}

TEST_CASE("coupled run with inactive cutoff stays identical") {
  Ensemble base;
  base.cutoff_n = 4;
  base.particles.push_back({{-0.5, 0, 0}, {0.5, 0.5, 0}, 0.4});
  base.particles.push_back({{0.5, 0, 0}, {-0.5, 0.5, 0}, 0.4});
  base.particles.push_back({{0, 0.5, 0}, {0, -0.8, 0}, 0.4});
  const auto run =
      coupled_integrate(base, 3, 0.4, {0.01, 0.25}, FieldMethod::direct(), Softening{0.1});
  CHECK(run.shared_count == 3);
  for (double d : run.delta_series) CHECK(d == 0.0);
  for (double d : run.eta_series) CHECK(d == 0.0);
  CHECK(run.sup_sigma == 0.0);
}

TEST_CASE("sigma starts at zero on any coupled run") {
  Ensemble base;
  base.cutoff_n = 3;
  base.particles.push_back({{-0.5, 0, 0}, {0.9, 0, 0}, 0.4});
  base.particles.push_back({{0.5, 0, 0}, {0, 1.4, 0}, 0.4});
  base.particles.push_back({{0, 0.7, 0}, {2.2, 0, 0}, 0.4});  // dropped by the low cutoff
  const auto run =
      coupled_integrate(base, 2, 0.3, {0.01, 0.25}, FieldMethod::direct(), Softening{0.1});
  CHECK(run.shared_count == 2);
  CHECK(run.sigma_series.front() == 0.0);
  CHECK(run.sigma_series.back() > 0.0);  // the extra particle perturbs the field
  for (std::size_t i = 0; i < run.sigma_series.size(); ++i)
    CHECK(run.sigma_series[i] ==
          std::max(run.delta_series[i], run.eta_series[i]));
}

TEST_CASE("coupled run requires a base covering n+1") {
  Ensemble base;
  base.cutoff_n = 3;
  base.particles.push_back({{0, 0, 0}, {1, 0, 0}, 0.1});
  CHECK_THROWS_AS(
      coupled_integrate(base, 3, 0.1, {0.01, 0.25}, FieldMethod::direct(), Softening{0.1}),
      std::invalid_argument);
}

TEST_CASE("separation check: constant velocity gap at the threshold") {
  Ensemble e = free_pair({0, 0, 0}, {1, 0, 0}, {0, 0, 0}, {0, 0, 0});
  IntegrateOptions opts;
  opts.tracked_ids = {0, 1};
  const auto traj = integrate(e, 2.0, {0.1, 0.25}, FieldMethod::direct(), Softening{0.0}, opts);
  // P = c_tilde = 2, gamma = 0 makes P^gamma = 1 = |dV|: a gap pair with equality
  const auto rep = separation_check(traj, std::vector<std::pair<int, int>>{{0, 1}}, 0.0,
                                    0.0, 2.0);
  REQUIRE(rep.pairs.size() == 1);
  CHECK(rep.p_gamma == 1.0);
  CHECK(rep.pairs[0].gap_pair);
  CHECK(rep.pairs[0].inf_gap == 1.0);
  CHECK(rep.pairs[0].sup_gap == 1.0);
  CHECK(rep.violations == 0);
  CHECK(rep.pairs[0].t0 == 0.0);
}

TEST_CASE("separation check: interior minimum obeys the rectilinear bound") {
  // closing then opening: dX(t) = (t - 1, 0, 0)
  Ensemble e = free_pair({0, 0, 0}, {0, 0, 0}, {-1, 0, 0}, {1, 0, 0});
  IntegrateOptions opts;
  opts.tracked_ids = {0, 1};
  const auto traj = integrate(e, 2.0, {0.1, 0.25}, FieldMethod::direct(), Softening{0.0}, opts);
  const auto rep = separation_check(traj, std::vector<std::pair<int, int>>{{0, 1}}, 0.0,
                                    0.0, 2.0);
  REQUIRE(rep.pairs.size() == 1);
  CHECK(rep.pairs[0].gap_pair);
  CHECK(rep.pairs[0].t0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.violations == 0);
  CHECK(rep.pairs[0].min_margin >= 0.0);
}

TEST_CASE("separation check: slow pairs stay below twice the threshold") {
  Ensemble e = free_pair({0, 0, 0}, {0.5, 0, 0}, {1, 0, 0}, {0, 0, 0});
  IntegrateOptions opts;
  opts.tracked_ids = {0, 1};
  const auto traj = integrate(e, 1.0, {0.1, 0.25}, FieldMethod::direct(), Softening{0.0}, opts);
  const auto rep = separation_check(traj, std::vector<std::pair<int, int>>{{0, 1}}, 0.0,
                                    0.0, 1.0);
  CHECK(!rep.pairs[0].gap_pair);
  CHECK(rep.violations == 0);
}

TEST_CASE("separation check rejects untracked pairs and bad windows") {
  Ensemble e = free_pair({0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 0, 0});
  IntegrateOptions opts;
  opts.tracked_ids = {0};
  const auto traj = integrate(e, 1.0, {0.1, 0.25}, FieldMethod::direct(), Softening{0.0}, opts);
  CHECK_THROWS_AS(separation_check(traj, std::vector<std::pair<int, int>>{{0, 1}}, 0.1,
                                   0.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(separation_check(traj, std::vector<std::pair<int, int>>{{0, 0}}, 0.1,
                                   0.5, 1.0),
                  std::invalid_argument);
}

TEST_CASE("field work of a zero-field run vanishes") {
  Ensemble e = free_pair({0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 1, 0});
  const auto traj = integrate(e, 1.0, {0.1, 0.25}, FieldMethod::direct(), Softening{0.0});
  const auto fw = field_work(traj);
  CHECK(fw.sup == 0.0);
  for (double w : fw.per_particle) CHECK(w == 0.0);
}

TEST_CASE("time average of a constant series is exact") {
  TrajectorySet traj;
  for (int i = 0; i <= 10; ++i) {
    traj.times.push_back(0.1 * i);
    traj.field_sup.push_back(0.73);
  }
  CHECK(time_average_field(traj, 0.0, 1.0) == doctest::Approx(0.73).epsilon(1e-15));
  CHECK(time_average_field(traj, 0.25, 0.5) == doctest::Approx(0.73).epsilon(1e-13));
  CHECK_THROWS_AS(time_average_field(traj, 0.8, 0.5), std::invalid_argument);
}

TEST_CASE("snapshots honor the stride and bracket the run") {
  Ensemble e = free_pair({0, 0, 0}, {1, 0, 0}, {3, 0, 0}, {0, 0, 0});
  IntegrateOptions opts;
  opts.snapshot_stride = 4;
  const auto traj = integrate(e, 1.0, {0.1, 0.25}, FieldMethod::direct(), Softening{0.0}, opts);
  REQUIRE(!traj.snap_times.empty());
  CHECK(traj.snap_times.front() == 0.0);
  CHECK(traj.snap_times.back() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(traj.snap_pos.size() == traj.snap_times.size());
}
