#include <cmath>
#include <random>

#include "doctest.h"
#include "vp/diagnostics.hpp"

using namespace vp;

TEST_CASE("mollifier plateau, support and midpoint") {
  CHECK(mollifier_eval(0.0) == 1.0);
  CHECK(mollifier_eval(0.5) == 1.0);
  CHECK(mollifier_eval(1.0) == 1.0);
  CHECK(mollifier_eval(2.0) == 0.0);
  CHECK(mollifier_eval(3.0) == 0.0);
  CHECK(mollifier_eval(1.5) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("mollifier slope stays in [-2, 0] with extremum 15/8") {
  double max_abs = 0.0;
  for (int i = 0; i <= 30000; ++i) {
    const double r = 3.0 * i / 30000.0;
    const double d = mollifier_deriv(r);
    CHECK(d <= 0.0);
    CHECK(d >= -2.0);
    max_abs = std::max(max_abs, -d);
    if (r > 0.0 && r < 3.0) {
      const double fd = (mollifier_eval(r + 1e-6) - mollifier_eval(r - 1e-6)) / 2e-6;
      CHECK(std::abs(fd - d) <= 1e-6);
    }
  }
  CHECK(max_abs == doctest::Approx(15.0 / 8.0).epsilon(1e-8));
  CHECK(mollifier_deriv(1.5) == -1.875);
}

TEST_CASE("local energy of the empty state") {
  Ensemble e;
  const auto rep = local_energy(e, {0, 0, 0}, 2.0, Softening{0.0});
  CHECK(rep.kinetic == 0.0);
  CHECK(rep.potential == 0.0);
  CHECK(rep.total == 0.0);
}

TEST_CASE("local energy of a single moving particle") {
  Ensemble e;
  e.particles.push_back({{0, 0, 0}, {2, 0, 0}, 1.0});
  const auto rep = local_energy(e, {0, 0, 0}, 1.0, Softening{0.0});
  CHECK(rep.kinetic == 2.0);
  CHECK(rep.potential == 0.0);
}

TEST_CASE("local energy pair potential") {
  Ensemble e;
  e.particles.push_back({{0, 0, 0}, {0, 0, 0}, 1.0});
  e.particles.push_back({{1, 0, 0}, {0, 0, 0}, 1.0});
  const auto rep = local_energy(e, {0.5, 0, 0}, 2.0, Softening{0.0});
  CHECK(rep.kinetic == 0.0);
  CHECK(rep.potential == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rep.total == rep.kinetic + rep.potential);
}

TEST_CASE("local energy positivity and monotonicity in the scale") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Ensemble e;
  for (int i = 0; i < 64; ++i)
    e.particles.push_back({{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}, 0.01});
  double prev = 0.0;
  for (double r : {1.0, 2.0, 4.0, 8.0}) {
    const auto rep = local_energy(e, {0.2, -0.1, 0.4}, r, Softening{0.05});
    CHECK(rep.kinetic >= 0.0);
    CHECK(rep.potential >= 0.0);
    CHECK(rep.total >= prev - 1e-15);
    prev = rep.total;
  }
}

TEST_CASE("q_sup of a single particle is its kinetic term") {
  Ensemble e;
  e.particles.push_back({{0.3, 0.1, -0.2}, {2, 0, 0}, 1.0});
  const auto res = q_sup(e, 1.0, 0.5, Softening{0.0});
  CHECK(res.value == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("q_sup never decreases under grid refinement") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Ensemble e;
  for (int i = 0; i < 48; ++i)
    e.particles.push_back({{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}, 0.05});
  const auto coarse = q_sup(e, 2.0, 1.0, Softening{0.05});
  const auto fine = q_sup(e, 2.0, 0.5, Softening{0.05});
  CHECK(fine.value >= coarse.value);
  CHECK(fine.grid_points > coarse.grid_points);
}

TEST_CASE("q_sup covering bound at double the scale") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  Ensemble e;
  for (int i = 0; i < 96; ++i)
    e.particles.push_back({{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}, 0.02});
  const auto q1 = q_sup(e, 1.0, 0.5, Softening{0.05});
  const auto rep = local_energy(e, {0, 0, 0}, 2.0, Softening{0.05});
  // a scale-2 ball is covered by at most 5^3 unit-lattice translates of scale-1 balls
  CHECK(rep.total <= 125.0 * q1.value);
}

TEST_CASE("shell integral basics") {
  Ensemble e;
  e.particles.push_back({{2, 0, 0}, {0, 0, 0}, 1.0});
  CHECK(shell_integral(e, {0, 0, 0}, 4.0) == 0.25);
  Ensemble close;
  close.particles.push_back({{0.5, 0, 0}, {0, 0, 0}, 1.0});
  CHECK(shell_integral(close, {0, 0, 0}, 4.0) == 0.0);  // inner cutoff at 1
}

TEST_CASE("far integral basics") {
  Ensemble e;
  e.particles.push_back({{10, 0, 0}, {0, 0, 0}, 2.0});
  CHECK(far_integral(e, {0, 0, 0}, 3.0) == 0.02);  // 2/100, beyond 3*3
  CHECK(far_integral(e, {0, 0, 0}, 4.0) == 0.0);   // inside 3*4
}

TEST_CASE("density grid of a single particle") {
  Ensemble e;
  e.particles.push_back({{0.4, 0.4, 0.4}, {1, 0, 0}, 0.7});
  const auto g = density_grid(e, 1.0);
  CHECK(g.sup_density == 0.7);
  CHECK(g.total_weight == 0.7);
  REQUIRE(g.cells.size() == 1);
}

TEST_CASE("density grid 5/3 moment of a uniform unit cube") {
  // 8x8x8 cells of weight h^3: unit density on [0,1]^3
  Ensemble e;
  const double h = 1.0 / 8.0;
  for (int z = 0; z < 8; ++z)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        e.particles.push_back({{(x + 0.5) * h, (y + 0.5) * h, (z + 0.5) * h},
                               {0, 0, 0},
                               h * h * h});
  const auto g = density_grid(e, h);
  CHECK(g.sup_density == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.moment_53 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.total_weight == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lattice masses sum particles inside unit balls") {
  Ensemble e;
  e.particles.push_back({{1.2, 0, 0}, {0, 0, 0}, 0.5});  // within 1 of sites (1,0,0) and (2,0,0)
  const auto g = density_grid(e, 1.0);
  const auto it1 = g.lattice_masses.find({1, 0, 0});
  REQUIRE(it1 != g.lattice_masses.end());
  CHECK(it1->second == 0.5);
  const auto it2 = g.lattice_masses.find({2, 0, 0});
  REQUIRE(it2 != g.lattice_masses.end());
  CHECK(it2->second == 0.5);
  CHECK(g.lattice_masses.count({0, 0, 0}) == 0);
}

TEST_CASE("interpolation constant minimizes the two-term bound") {
  // c_int must make rho^(5/3) <= c_int * k exactly at the optimizing a
  const double f_inf = 0.7;
  const double c = 4.0 * M_PI / 3.0 * f_inf;
  const double c_int = interpolation_constant(f_inf);
  // pick any khat, form rho at the optimum, check equality
  const double khat = 0.37;
  const double kk = 2.0 * khat;
  const double a = std::pow(2.0 * kk / (3.0 * c), 0.2);
  const double rho = c * a * a * a + kk / (a * a);
  CHECK(std::pow(rho, 5.0 / 3.0) == doctest::Approx(c_int * khat).epsilon(1e-12));
  // and the bound must hold at non-optimal a too
  for (double aa : {0.5 * a, 2.0 * a}) {
    const double rho2 = c * aa * aa * aa + kk / (aa * aa);
    CHECK(std::pow(rho2, 5.0 / 3.0) >= c_int * khat);
  }
}

TEST_CASE("interpolation check flags a fabricated violation only") {
  DensityGrid g;
  g.h_rho = 1.0;
  g.cells[{0, 0, 0}] = {1.0, 10.0};   // plenty of kinetic support
  g.cells[{1, 0, 0}] = {1.0, 1e-12};  // cold dense cell violates
  const auto bad = interpolation_check(g, 1.0);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0].cell == std::array<long, 3>{1, 0, 0});
}

TEST_CASE("dyadic census shell count bound") {
  Ensemble e;
  e.particles.push_back({{0, 0, 0}, {0, 0, 0}, 1.0});
  const auto c = dyadic_shell_census(e, {0, 0, 0}, 1024.0, 1.0, 0.3, 1.1);
  CHECK(c.m == 7);  // floor(0.7 * 10)
  CHECK(c.m <= 0.7 * std::log2(1024.0));
}

TEST_CASE("dyadic census alpha and l values") {
  Ensemble e;
  e.particles.push_back({{0, 0, 0}, {0, 0, 0}, 1.0});
  const auto c = dyadic_shell_census(e, {0, 0, 0}, 2.0, 1.0, 0.0, 1.0);
  REQUIRE(c.alpha.size() >= 2);
  CHECK(c.alpha[1] == 1.0);
  REQUIRE(c.l.size() >= 2);
  CHECK(c.l[1] == doctest::Approx(std::pow(2.0, 2.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("census routes equal velocities to B1 and partitions weight") {
  Ensemble e;
  for (int i = 0; i < 10; ++i) e.particles.push_back({{0, 0, 0}, {1, 2, 0}, 0.1});
  const auto c = dyadic_shell_census(e, {1, 2, 0}, 8.0, 1.0, 0.25, 1.1);
  CHECK(c.b1_count == 10);
  CHECK(c.b1_weight == doctest::Approx(1.0).epsilon(1e-14));
  for (double w : c.band_weight) CHECK(w == 0.0);
  CHECK(c.overflow_weight == 0.0);
}

TEST_CASE("census weight partition is exhaustive") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  Ensemble e;
  for (int i = 0; i < 300; ++i)
    e.particles.push_back({{0, 0, 0}, {u(rng), u(rng), u(rng)}, 0.01});
  const auto c = dyadic_shell_census(e, {0, 0, 0}, 8.0, 1.0, 0.25, 1.1);
  double total = c.b1_weight + c.overflow_weight;
  for (double w : c.band_weight) total += w;
  CHECK(total == doctest::Approx(e.total_weight()).epsilon(1e-13));
}

TEST_CASE("nested average never exceeds the max sub-average") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> series;
    const int g = 2 + static_cast<int>(rng() % 5);
    const int len = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < g * len; ++i) series.push_back(u(rng));
    CHECK(nested_average_identity(series, g, len));
  }
}

TEST_CASE("linear fit recovers exact coefficients") {
  std::vector<double> xs, ys;
  for (int i = 0; i < 10; ++i) {
    xs.push_back(i);
    ys.push_back(3.5 * i - 2.0);
  }
  const auto f = fit_linear(xs, ys);
  CHECK(f.slope == doctest::Approx(3.5).epsilon(1e-13));
  CHECK(f.intercept == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(f.residual <= 1e-12);
}

TEST_CASE("loglog fit recovers a power law") {
  std::vector<double> xs, ys;
  for (double x : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    xs.push_back(x);
    ys.push_back(0.7 * std::pow(x, -2.5));
  }
  const auto f = fit_loglog(xs, ys);
  CHECK(f.slope == doctest::Approx(-2.5).epsilon(1e-12));
}
