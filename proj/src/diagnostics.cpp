#include "vp/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace vp {

double mollifier_eval(double r) {
  if (r < 0.0) throw std::domain_error("mollifier argument must be >= 0");
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double u = r - 1.0;
  const double s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
  return 1.0 - s;
}

double mollifier_deriv(double r) {
  if (r < 0.0) throw std::domain_error("mollifier argument must be >= 0");
  if (r <= 1.0 || r >= 2.0) return 0.0;
  const double u = r - 1.0;
  return -30.0 * u * u * (1.0 - u) * (1.0 - u);
}

EnergyReport local_energy(const Ensemble& state, const Vec3& mu, double r,
                          const Softening& soft) {
  if (!(r >= 1.0)) throw std::invalid_argument("local_energy requires r >= 1");
  const double eps2 = soft.delta_s * soft.delta_s;
  const auto& ps = state.particles;
  EnergyReport rep;
  rep.mu = mu;
  rep.r = r;
  for (size_t i = 0; i < ps.size(); ++i) {
    const double phi = mollifier_eval((ps[i].pos - mu).norm() / r);
    if (phi == 0.0) continue;
    rep.kinetic += 0.5 * ps[i].weight * phi * ps[i].vel.norm2();
    double pot = 0.0;
    for (size_t j = 0; j < ps.size(); ++j) {
      if (j == i) continue;
      const double d2 = (ps[i].pos - ps[j].pos).norm2();
      if (d2 == 0.0 && eps2 == 0.0)
        throw std::domain_error("singularity: coincident particles with zero softening");
      pot += ps[j].weight / std::sqrt(d2 + eps2);
    }
    rep.potential += 0.5 * ps[i].weight * phi * pot;
  }
  rep.total = rep.kinetic + rep.potential;
  return rep;
}

namespace {

struct CollapsedSite {
  Vec3 pos;
  double weight = 0.0;    // sum of w over particles at this position
  double kin2 = 0.0;      // sum of w |v|^2
  double w2 = 0.0;        // sum of w^2 (for the same-position pair term)
  double energy = 0.0;    // w*|v|^2 + w*pot_ext + (w^2_tot - sum w^2)/delta_s
};

struct CellKey {
  long x, y, z;
  bool operator==(const CellKey& o) const { return x == o.x && y == o.y && z == o.z; }
};
struct CellHash {
  size_t operator()(const CellKey& k) const {
    size_t h = 1469598103934665603ull;
    for (long v : {k.x, k.y, k.z}) {
      h ^= static_cast<size_t>(v) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return h;
  }
};

// Group particles sharing a sampling-cell position; positions compare bitwise.
std::vector<CollapsedSite> collapse_positions(const Ensemble& state, const Softening& soft) {
  std::unordered_map<CellKey, size_t, CellHash> index;
  std::vector<CollapsedSite> sites;
  auto key_of = [](const Vec3& p) {
    CellKey k;
    k.x = static_cast<long>(std::llround(p.x * 1048576.0));
    k.y = static_cast<long>(std::llround(p.y * 1048576.0));
    k.z = static_cast<long>(std::llround(p.z * 1048576.0));
    return k;
  };
  for (const auto& p : state.particles) {
    const CellKey k = key_of(p.pos);
    auto [it, fresh] = index.try_emplace(k, sites.size());
    if (fresh) sites.push_back({p.pos, 0.0, 0.0, 0.0, 0.0});
    auto& s = sites[it->second];
    s.weight += p.weight;
    s.kin2 += p.weight * p.vel.norm2();
    s.w2 += p.weight * p.weight;
  }
  // external potential at each site over the other sites
  std::vector<Vec3> pos(sites.size());
  std::vector<double> w(sites.size());
  for (size_t i = 0; i < sites.size(); ++i) {
    pos[i] = sites[i].pos;
    w[i] = sites[i].weight;
  }
  const bool use_tree = sites.size() > 2048;
  std::optional<Octree> tree;
  if (use_tree) tree.emplace(pos, w);
  const double eps2 = soft.delta_s * soft.delta_s;
  for (size_t i = 0; i < sites.size(); ++i) {
    double pot;
    if (use_tree) {
      // subtract own softened self term added by the tree sum
      pot = tree->potential_at(pos[i], 0.2, soft.delta_s);
      pot -= soft.delta_s > 0.0 ? w[i] / soft.delta_s : 0.0;
    } else {
      pot = 0.0;
      for (size_t j = 0; j < sites.size(); ++j) {
        if (j == i) continue;
        pot += w[j] / std::sqrt((pos[i] - pos[j]).norm2() + eps2);
      }
    }
    double same_pos = 0.0;
    const double cross = sites[i].weight * sites[i].weight - sites[i].w2;
    if (cross > 0.0) {
      if (soft.delta_s == 0.0)
        throw std::domain_error("singularity: coincident particles with zero softening");
      same_pos = cross / soft.delta_s;
    }
    sites[i].energy = sites[i].kin2 + sites[i].weight * pot + same_pos;
  }
  return sites;
}

}  // namespace

QSupResult q_sup(const Ensemble& state, double r, double mu_grid_spacing,
                 const Softening& soft) {
  if (!(r >= 1.0)) throw std::invalid_argument("q_sup requires r >= 1");
  if (!(mu_grid_spacing > 0.0 && mu_grid_spacing <= r / 2.0))
    throw std::invalid_argument("q_sup requires 0 < spacing <= r/2");
  QSupResult res;
  res.spacing = mu_grid_spacing;
  if (state.particles.empty()) return res;

  const auto sites = collapse_positions(state, soft);

  Vec3 lo = sites[0].pos, hi = sites[0].pos;
  for (const auto& s : sites) {
    lo.x = std::min(lo.x, s.pos.x); lo.y = std::min(lo.y, s.pos.y); lo.z = std::min(lo.z, s.pos.z);
    hi.x = std::max(hi.x, s.pos.x); hi.y = std::max(hi.y, s.pos.y); hi.z = std::max(hi.z, s.pos.z);
  }
  lo -= Vec3{2 * r, 2 * r, 2 * r};
  hi += Vec3{2 * r, 2 * r, 2 * r};

  // hash sites into cells of side 2r; phi support is |x-mu| <= 2r, so 27 neighbors cover it
  const double cell = 2.0 * r;
  std::unordered_map<CellKey, std::vector<int>, CellHash> buckets;
  auto bucket_of = [cell](const Vec3& p) {
    return CellKey{static_cast<long>(std::floor(p.x / cell)),
                   static_cast<long>(std::floor(p.y / cell)),
                   static_cast<long>(std::floor(p.z / cell))};
  };
  for (size_t i = 0; i < sites.size(); ++i)
    buckets[bucket_of(sites[i].pos)].push_back(static_cast<int>(i));

  const double h = mu_grid_spacing;
  const long nx = static_cast<long>(std::floor((hi.x - lo.x) / h)) + 1;
  const long ny = static_cast<long>(std::floor((hi.y - lo.y) / h)) + 1;
  const long nz = static_cast<long>(std::floor((hi.z - lo.z) / h)) + 1;
  res.grid_points = static_cast<std::size_t>(nx) * ny * nz;

  const double r2max = 4.0 * r * r;
  for (long iz = 0; iz < nz; ++iz)
    for (long iy = 0; iy < ny; ++iy)
      for (long ix = 0; ix < nx; ++ix) {
        const Vec3 mu{lo.x + ix * h, lo.y + iy * h, lo.z + iz * h};
        const CellKey b = bucket_of(mu);
        double w_sum = 0.0;
        for (long dz = -1; dz <= 1; ++dz)
          for (long dy = -1; dy <= 1; ++dy)
            for (long dx = -1; dx <= 1; ++dx) {
              auto it = buckets.find(CellKey{b.x + dx, b.y + dy, b.z + dz});
              if (it == buckets.end()) continue;
              for (int si : it->second) {
                const double d2 = (sites[si].pos - mu).norm2();
                if (d2 > r2max) continue;
                w_sum += mollifier_eval(std::sqrt(d2) / r) * sites[si].energy;
              }
            }
        const double w = 0.5 * w_sum;
        if (w > res.value) {
          res.value = w;
          res.argmax = mu;
        }
      }
  return res;
}

double shell_integral(const Ensemble& state, const Vec3& mu, double r) {
  if (!(r >= 1.0)) throw std::invalid_argument("shell_integral requires r >= 1");
  double s = 0.0;
  for (const auto& p : state.particles) {
    const double d2 = (p.pos - mu).norm2();
    if (d2 >= 1.0 && d2 <= r * r) s += p.weight / d2;
  }
  return s;
}

double far_integral(const Ensemble& state, const Vec3& mu, double r_n) {
  if (!(r_n >= 1.0)) throw std::invalid_argument("far_integral requires r_n >= 1");
  const double rcut2 = 9.0 * r_n * r_n;
  double s = 0.0;
  for (const auto& p : state.particles) {
    const double d2 = (p.pos - mu).norm2();
    if (d2 >= rcut2) s += p.weight / d2;
  }
  return s;
}

DensityGrid density_grid(const Ensemble& state, double h_rho) {
  if (!(h_rho > 0.0)) throw std::invalid_argument("h_rho must be positive");
  DensityGrid g;
  g.h_rho = h_rho;
  const double vol = h_rho * h_rho * h_rho;
  for (const auto& p : state.particles) {
    const std::array<long, 3> key{static_cast<long>(std::floor(p.pos.x / h_rho)),
                                  static_cast<long>(std::floor(p.pos.y / h_rho)),
                                  static_cast<long>(std::floor(p.pos.z / h_rho))};
    auto& c = g.cells[key];
    c.weight += p.weight;
    c.kinetic += 0.5 * p.weight * p.vel.norm2();
    g.total_weight += p.weight;
  }
  for (const auto& [key, c] : g.cells) {
    const double rho = c.weight / vol;
    g.sup_density = std::max(g.sup_density, rho);
    g.moment_53 += std::pow(rho, 5.0 / 3.0) * vol;
  }
  // unit-ball masses around lattice sites: each particle feeds the sites within distance 1
  for (const auto& p : state.particles) {
    const long cx = static_cast<long>(std::llround(p.pos.x));
    const long cy = static_cast<long>(std::llround(p.pos.y));
    const long cz = static_cast<long>(std::llround(p.pos.z));
    for (long dz = -1; dz <= 1; ++dz)
      for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx) {
          const Vec3 site{static_cast<double>(cx + dx), static_cast<double>(cy + dy),
                          static_cast<double>(cz + dz)};
          if ((p.pos - site).norm2() <= 1.0)
            g.lattice_masses[{cx + dx, cy + dy, cz + dz}] += p.weight;
        }
  }
  return g;
}

double interpolation_constant(double f_inf) {
  if (!(f_inf > 0.0)) throw std::invalid_argument("f_inf must be positive");
  // rho <= c a^3 + 2 khat / a^2 with c = (4pi/3) f_inf; minimum over a gives
  // rho <= (5/3)(3/2)^(2/5) c^(2/5) (2 khat)^(3/5); raise to 5/3.
  const double c = 4.0 * M_PI / 3.0 * f_inf;
  const double k53 = std::pow(5.0 / 3.0, 5.0 / 3.0) * std::pow(3.0 / 2.0, 2.0 / 3.0);
  return 2.0 * k53 * std::pow(c, 2.0 / 3.0);
}

std::vector<InterpolationViolation> interpolation_check(const DensityGrid& grid, double f_inf,
                                                        double slack) {
  const double c_int = interpolation_constant(f_inf);
  const double vol = grid.h_rho * grid.h_rho * grid.h_rho;
  std::vector<InterpolationViolation> out;
  for (const auto& [key, c] : grid.cells) {
    const double rho = c.weight / vol;
    const double khat = c.kinetic / vol;
    const double lhs = std::pow(rho, 5.0 / 3.0);
    const double rhs = c_int * khat;
    if (lhs > rhs * (1.0 + slack)) out.push_back({key, lhs, rhs});
  }
  return out;
}

VelocityShellCensus dyadic_shell_census(const Ensemble& state, const Vec3& v_ref, double p,
                                        double q, double gamma, double eta) {
  if (!(p > 1.0 && q > 0.0)) throw std::invalid_argument("census requires p > 1, q > 0");
  VelocityShellCensus c;
  c.m = static_cast<int>(std::floor((1.0 - gamma) * std::log2(p)));
  const double thr = std::pow(p, gamma);
  for (int k = 0; k <= c.m + 1; ++k) c.alpha.push_back(p / std::pow(2.0, k));
  for (int k = 0; k <= c.m; ++k)
    c.l.push_back(std::pow(2.0, 3.0 * k) * std::cbrt(q) / std::pow(p, 4.0 / 3.0 + eta));
  c.band_weight.assign(c.m + 1, 0.0);
  c.band_count.assign(c.m + 1, 0);
  for (const auto& part : state.particles) {
    const double dv = (part.vel - v_ref).norm();
    if (dv <= thr) {
      c.b1_weight += part.weight;
      ++c.b1_count;
      continue;
    }
    if (dv > c.alpha[0]) {
      c.overflow_weight += part.weight;
      continue;
    }
    for (int k = 0; k <= c.m; ++k) {
      if (dv > c.alpha[k + 1] && dv <= c.alpha[k]) {
        c.band_weight[k] += part.weight;
        ++c.band_count[k];
        break;
      }
    }
  }
  return c;
}

std::vector<int> census_band_violations(const VelocityShellCensus& census, double norm,
                                        double slack) {
  std::vector<int> bad;
  for (size_t k = 0; k < census.band_weight.size(); ++k) {
    const double bound = norm * 4.0 * M_PI / 3.0 * std::pow(census.alpha[k], 3.0);
    if (census.band_weight[k] > bound * (1.0 + slack)) bad.push_back(static_cast<int>(k));
  }
  return bad;
}

bool nested_average_identity(const std::vector<double>& series, int g, int len) {
  if (g < 1 || len < 1 || series.size() < static_cast<size_t>(g) * len) return false;
  double total = 0.0;
  double max_sub = -1e300;
  for (int i = 0; i < g; ++i) {
    double sub = 0.0;
    for (int j = 0; j < len; ++j) sub += series[static_cast<size_t>(i) * len + j];
    sub /= len;
    max_sub = std::max(max_sub, sub);
    total += sub;
  }
  return total / g <= max_sub * (1.0 + 1e-14) + 1e-300;
}

LinearFit fit_linear(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("fit needs >= 2 matching samples");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i]; sy += ys[i]; sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
  }
  LinearFit f;
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("degenerate abscissae in fit");
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double rss = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (f.slope * xs[i] + f.intercept);
    rss += r * r;
  }
  f.residual = std::sqrt(rss / n);
  return f;
}

LinearFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> lx, ly;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0 && ys[i] > 0.0))
      throw std::invalid_argument("fit_loglog requires positive samples");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  return fit_linear(lx, ly);
}

}  // namespace vp
