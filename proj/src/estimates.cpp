#include "vp/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vp {

namespace {
constexpr double kRegimeBoundary = 6.0 / 19.0;  // gg nonempty iff beta < 6/19
}

Interval ParamRanges::eta_interval(double gamma_choice, double delta_choice) const {
  if (regime == Regime::Direct)
    return {(3.0 + beta) / 3.0, 1.0 + gamma_choice - beta};
  return {(3.0 + beta) / 3.0, 5.0 / 3.0 + gamma_choice - 2.0 / 3.0 * beta - delta_choice};
}

ParamRanges param_ranges(double epsilon) {
  if (!(epsilon > 1.0 / 15.0 && epsilon < 1.0))
    throw std::invalid_argument("epsilon must satisfy 1/15 < epsilon < 1");
  ParamRanges r;
  r.epsilon = epsilon;
  r.beta = 1.0 - epsilon;
  r.alpha = {(5.0 - epsilon) / 9.0, 2.0 / 3.0};
  if (r.beta < kRegimeBoundary) {
    r.regime = Regime::Direct;
    r.gamma = {4.0 * r.beta / 3.0, (2.0 - r.beta) / 4.0};
    r.delta = {0.0, 0.0};
  } else {
    r.regime = Regime::Iterated;
    r.delta = {0.0, 7.0 / 6.0 - 5.0 / 4.0 * r.beta};
    // gamma lower bound depends on delta; expose the delta-free envelope here and
    // validate jointly in ParamBundle::validate
    r.gamma = {std::max(0.0, r.beta - 2.0 / 3.0), (2.0 - r.beta) / 4.0};
  }
  return r;
}

void ParamBundle::validate() const {
  const ParamRanges r = param_ranges(epsilon);
  if (std::abs(beta - (1.0 - epsilon)) > 1e-12)
    throw std::invalid_argument("beta must equal 1 - epsilon");
  if (regime != r.regime) throw std::invalid_argument("regime tag mismatch for this epsilon");
  if (!r.alpha.contains(alpha)) throw std::invalid_argument("alpha outside ((5-eps)/9, 2/3)");
  if (regime == Regime::Direct) {
    if (!r.gamma.contains(gamma)) throw std::invalid_argument("gamma outside (4b/3, (2-b)/4)");
    if (!r.eta_interval(gamma).contains(eta))
      throw std::invalid_argument("eta outside ((3+b)/3, 1+gamma-b)");
  } else {
    if (!r.delta.contains(delta))
      throw std::invalid_argument("delta outside (0, 7/6 - 5b/4)");
    const Interval g{std::max(0.0, beta - 2.0 / 3.0 + delta), (2.0 - beta) / 4.0};
    if (!g.contains(gamma))
      throw std::invalid_argument("gamma outside (max{0, b-2/3+d}, (2-b)/4)");
    if (!r.eta_interval(gamma, delta).contains(eta))
      throw std::invalid_argument("eta outside ((3+b)/3, 5/3+gamma-2b/3-d)");
  }
}

Schedule make_schedule(double p, double q, double c2, double gamma, double delta, double beta,
                       double eta, std::optional<double> horizon) {
  if (!(p > 1.0)) throw std::invalid_argument("P must exceed the floor constant (> 1)");
  if (!(q > 0.0)) throw std::invalid_argument("Q must be positive");
  if (!(c2 > 0.0)) throw std::invalid_argument("C2 must be positive");
  Schedule s;
  s.delta_1 = 1.0 / (4.0 * c2 * std::pow(p, 4.0 / 3.0 - gamma) * std::cbrt(q));
  s.g_factor = static_cast<long>(std::floor(std::pow(p, delta)));
  if (s.g_factor < 1) s.g_factor = 1;  // unreachable for p > 1, delta >= 0

  // smallest integer with beta - 1/3 + eta - gamma - (ell-1) delta < 2/3,
  // i.e. (ell-1) delta > beta + eta - gamma - 1. Ties within round-off count as
  // not yet satisfied, so exact boundary cases resolve the way exact arithmetic would.
  const double rhs = beta + eta - gamma - 1.0;
  if (rhs <= 0.0) {
    s.ell_bar = 1;
  } else {
    if (!(delta > 0.0)) throw std::invalid_argument("no finite ell_bar: delta = 0");
    const double tol = 1e-9 * std::max(1.0, std::abs(rhs));
    int ell = 1;
    while ((ell - 1) * delta <= rhs + tol) {
      ++ell;
      if (ell > 100000) throw std::invalid_argument("no finite ell_bar");
    }
    s.ell_bar = ell;
  }
  s.deltas.resize(s.ell_bar);
  for (int i = 0; i < s.ell_bar; ++i)
    s.deltas[i] = s.delta_1 * std::pow(static_cast<double>(s.g_factor), i);
  if (s.g_factor == 1 && s.ell_bar > 1)
    s.warnings.push_back("G = 1: ladder windows do not grow (P^delta < 2)");
  if (horizon) {
    if (s.deltas.back() >= *horizon)
      s.warnings.push_back("Delta_ellbar >= T: ladder exceeds the time horizon");
    if (s.delta_1 > *horizon / 10.0)
      s.warnings.push_back("Delta > T/10: floor constant C~ may be too small");
  }
  return s;
}

std::vector<std::pair<int, int>> ladder_violations(const ParamBundle& b, int ell_bar) {
  std::vector<std::pair<int, int>> bad;
  for (int ell = 1; ell <= ell_bar; ++ell) {
    const double shift = (ell - 1) * b.delta;
    const double e1 = 4.0 / 3.0 * b.gamma - 4.0 / 3.0 + b.gamma + shift;
    const double e2 = 1.0 / 3.0 - b.eta + b.gamma + shift;
    const double e3 = 2.0 / 3.0 * b.beta - 5.0 / 3.0 + b.eta + b.delta;
    const double exps[3] = {e1, e2, e3};
    for (int i = 0; i < 3; ++i)
      if (!(exps[i] < b.gamma)) bad.emplace_back(i + 1, ell);
  }
  return bad;
}

double lattice_tail_bound(double s, double l) {
  if (!(s > 3.0)) throw std::invalid_argument("tail bound needs exponent > 3");
  const double r0 = l - std::sqrt(3.0);
  if (r0 <= 0.0) throw std::invalid_argument("tail bound needs L > sqrt(3)");
  // each unit cell centered at i with |i| > L lies in {|x| > L - sqrt(3)/...}; bound the
  // cell value by the integral over the shifted ball with a 2^s cell-distortion factor
  return std::pow(2.0, s) * 4.0 * M_PI * std::pow(r0, 3.0 - s) / (s - 3.0);
}

LatticeSumReport lattice_sum_audit(double epsilon, const std::vector<double>& radii,
                                   const std::vector<Vec3>& mu_samples) {
  if (!(epsilon > 1.0 / 15.0 && epsilon < 1.0))
    throw std::invalid_argument("epsilon must satisfy 1/15 < epsilon < 1");
  for (double r : radii)
    if (!(r > 0.0)) throw std::invalid_argument("audit radii must be positive");

  LatticeSumReport rep;
  const double s_exp = 2.0 + epsilon;

  // S(R): exact integer-norm enumeration, no truncation; |i|^-s precomputed per
  // integer norm so the large radii stay cheap
  long lim2_max = 0;
  for (double r : radii)
    lim2_max = std::max(lim2_max, static_cast<long>(std::floor(25.0 * r * r)));
  std::vector<double> pow_tab(static_cast<std::size_t>(lim2_max) + 1, 0.0);
  for (long n2 = 2; n2 <= lim2_max; ++n2)
    pow_tab[n2] = std::pow(static_cast<double>(n2), -s_exp / 2.0);
  for (double r : radii) {
    const double lim = 5.0 * r;
    const long lmax = static_cast<long>(std::floor(lim));
    const long lim2 = static_cast<long>(std::floor(lim * lim));
    double sum = 0.0;
    for (long z = -lmax; z <= lmax; ++z)
      for (long y = -lmax; y <= lmax; ++y) {
        const long zy2 = z * z + y * y;
        if (zy2 > lim2) continue;
        for (long x = -lmax; x <= lmax; ++x) {
          const long n2 = x * x + zy2;
          if (n2 <= 1 || n2 > lim2) continue;
          sum += pow_tab[n2];
        }
      }
    rep.rows.push_back({r, sum, sum / std::pow(r, 1.0 - epsilon)});
  }

  // mu-sums with the index-split bound S1 + S2
  const long lmu = 80;
  for (const Vec3& mu : mu_samples) {
    LatticeSumReport::MuRow row;
    row.mu = mu;
    double s1 = 0.0, s2 = 0.0;
    const long base_x = static_cast<long>(std::llround(mu.x));
    const long base_y = static_cast<long>(std::llround(mu.y));
    const long base_z = static_cast<long>(std::llround(mu.z));
    for (long z = -lmu; z <= lmu; ++z)
      for (long y = -lmu; y <= lmu; ++y)
        for (long x = -lmu; x <= lmu; ++x) {
          {
            const long n2 = x * x + y * y + z * z;
            if (n2 >= 1) {
              const Vec3 d{mu.x - x, mu.y - y, mu.z - z};
              const double md2 = d.norm2();
              if (md2 >= 1.0)
                row.sum += 1.0 / (md2 * std::pow(static_cast<double>(n2), s_exp / 2.0));
              s1 += std::pow(static_cast<double>(n2), -(4.0 + epsilon) / 2.0);
            }
          }
          {
            // S2 runs over sites near mu so both sub-sums cover their own index set
            const Vec3 d{mu.x - (base_x + x), mu.y - (base_y + y), mu.z - (base_z + z)};
            const double md2 = d.norm2();
            if (md2 >= 1.0) s2 += std::pow(md2, -(4.0 + epsilon) / 2.0);
          }
        }
    row.tail_bound = 2.0 * lattice_tail_bound(4.0 + epsilon, static_cast<double>(lmu));
    row.split_bound = s1 + s2 + row.tail_bound;
    rep.mu_rows.push_back(row);
  }

  // (C3)-type check: int g(|y|)/|x-y| dy for the power-law g, radial quadrature
  {
    const double ymax = 400.0;
    auto g = [s_exp](double r) {
      return r <= 1.0 ? 1.0 : std::pow(r, -s_exp);
    };
    auto phi_at = [&](double r) {
      // int g/|x-y| = (4pi/r) int_0^r s^2 g + 4pi int_r^Y s g, plus the analytic tail
      const int n = 4000;
      double inner = 0.0, outer = 0.0;
      const double h1 = r / n;
      for (int i = 0; i < n; ++i) {
        const double s = (i + 0.5) * h1;
        inner += s * s * g(s) * h1;
      }
      const double h2 = (ymax - r) / n;
      for (int i = 0; i < n; ++i) {
        const double s = r + (i + 0.5) * h2;
        outer += s * g(s) * h2;
      }
      const double tail = std::pow(ymax, -epsilon) / epsilon;  // int_Y^inf s^-(1+eps)
      return 4.0 * M_PI * (inner / std::max(r, 1e-9) + outer + tail);
    };
    for (double r : {0.0, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0})
      rep.potential_sup = std::max(rep.potential_sup, phi_at(std::max(r, 1e-6)));
  }
  return rep;
}

double velocity_tail_radius(double epsilon, double lambda_bar, double site_norm) {
  if (!(site_norm > 1.0)) throw std::invalid_argument("site norm must exceed 1");
  if (!(lambda_bar > 0.0)) throw std::invalid_argument("lambda_bar must be positive");
  return std::sqrt(2.0 * (2.0 + epsilon) * std::log(site_norm) / lambda_bar);
}

std::vector<ConvexityViolation> convexity_bound_check(
    const std::vector<std::pair<double, double>>& samples) {
  std::vector<ConvexityViolation> bad;
  for (const auto& [r, a] : samples) {
    if (!(r > 0.0 && r < 1.0 && a > 0.0 && a < 1.0))
      throw std::invalid_argument("convexity samples must lie in (0,1)^2");
    const double lhs = r * (std::abs(std::log(r)) + 1.0);
    const double rhs = r * std::abs(std::log(a)) + a;
    if (lhs > rhs * (1.0 + 1e-14)) bad.push_back({r, a, lhs, rhs});
  }
  return bad;
}

double profile_lattice_c1(const DecayProfile& profile, double epsilon, double max_radius,
                          double h) {
  double c1 = 0.0;
  const long rmax = static_cast<long>(std::floor(max_radius));
  for (long z = -rmax; z <= rmax; ++z)
    for (long y = -rmax; y <= rmax; ++y)
      for (long x = -rmax; x <= rmax; ++x) {
        const long n2 = x * x + y * y + z * z;
        if (n2 < 1 || static_cast<double>(n2) > max_radius * max_radius) continue;
        const Vec3 site{static_cast<double>(x), static_cast<double>(y),
                        static_cast<double>(z)};
        // midpoint quadrature of g over the unit ball around the site
        double mass = 0.0;
        const int n = static_cast<int>(std::ceil(2.0 / h));
        for (int iz = 0; iz < n; ++iz)
          for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
              const Vec3 p{site.x - 1.0 + (ix + 0.5) * h, site.y - 1.0 + (iy + 0.5) * h,
                           site.z - 1.0 + (iz + 0.5) * h};
              if ((p - site).norm2() > 1.0) continue;
              mass += profile.eval(p.norm()) * h * h * h;
            }
        c1 = std::max(c1, mass * std::pow(std::sqrt(static_cast<double>(n2)), 2.0 + epsilon));
      }
  return c1;
}

}  // namespace vp
