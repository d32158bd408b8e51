#include "vp/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vp {

void PhysParams::validate() const {
  if (!(epsilon > 1.0 / 15.0 && epsilon < 1.0))
    throw std::invalid_argument("epsilon must satisfy 1/15 < epsilon < 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (!(c0 > 0.0)) throw std::invalid_argument("c0 must be positive");
  if (!(c1 > 0.0)) throw std::invalid_argument("c1 must be positive");
}

double DecayProfile::eval(double r) const {
  if (kind == ProfileKind::PowerLaw) {
    // capped at the r=1 value inside the unit ball: bounded, continuous, non-increasing
    if (r <= 1.0) return c;
    return c * std::pow(r, -(2.0 + epsilon));
  }
  for (const auto& p : plateaus) {
    if (std::abs(r - p.center) <= p.halfwidth) return p.height;
  }
  return 0.0;
}

double DecayProfile::sup() const {
  if (kind == ProfileKind::PowerLaw) return c;
  double m = 0.0;
  for (const auto& p : plateaus) m = std::max(m, p.height);
  return m;
}

void SamplingSpec::validate() const {
  if (!(h_x > 0.0) || !(h_v > 0.0)) throw std::invalid_argument("cell sizes must be positive");
  if (!(r_max >= 1.0)) throw std::invalid_argument("r_max must be >= 1");
  if (!(weight_floor_rel >= 0.0)) throw std::invalid_argument("weight floor must be >= 0");
}

double Ensemble::total_weight() const {
  double s = 0.0;
  for (const auto& p : particles) s += p.weight;
  return s;
}

double eval_initial_density(const DecayProfile& profile, const PhysParams& params,
                            const Vec3& x, const Vec3& v) {
  return params.c0 * std::exp(-params.lambda * v.norm2()) * profile.eval(x.norm());
}

namespace {

// Velocity cell centers live at (j+1/2)h_v; a center must never sit on an integer
// speed shell, otherwise cutoff membership is ambiguous across N.
void check_velocity_alignment(double h_v, int cutoff_n) {
  const long jmax = static_cast<long>(std::ceil(cutoff_n / h_v)) + 1;
  for (long j = 0; j <= jmax; ++j) {
    const double c = (j + 0.5) * h_v;  // axis-aligned centers are the tightest case
    const double nearest = std::round(c);
    if (nearest >= 1.0 && nearest <= cutoff_n && std::abs(c - nearest) < 1e-12 * (1.0 + c))
      throw std::invalid_argument(
          "velocity grid does not align with integer cutoffs (cell center at speed " +
          std::to_string(c) + ")");
  }
}

struct VCell {
  int shell;  // smallest integer n with |center| <= n
  int ix, iy, iz;
};

}  // namespace

Ensemble sample_ensemble(const DecayProfile& profile, const PhysParams& params,
                         const SamplingSpec& spec, int cutoff_n) {
  params.validate();
  spec.validate();
  if (cutoff_n < 1) throw std::invalid_argument("cutoff_n must be >= 1");
  check_velocity_alignment(spec.h_v, cutoff_n);

  Ensemble ens;
  ens.cutoff_n = cutoff_n;
  ens.params = params;
  ens.profile = profile;
  ens.sampling = spec;
  ens.f_inf = params.c0 * profile.sup();

  const double hx = spec.h_x, hv = spec.h_v;
  const double cell_vol = hx * hx * hx * hv * hv * hv;
  const double floor_w = spec.weight_floor_rel * ens.f_inf * cell_vol;

  // velocity cells with |center| <= cutoff_n, ordered by (shell, iz, iy, ix)
  std::vector<VCell> vcells;
  const int jmax = static_cast<int>(std::ceil(cutoff_n / hv));
  for (int iz = -jmax - 1; iz <= jmax; ++iz)
    for (int iy = -jmax - 1; iy <= jmax; ++iy)
      for (int ix = -jmax - 1; ix <= jmax; ++ix) {
        const Vec3 c{(ix + 0.5) * hv, (iy + 0.5) * hv, (iz + 0.5) * hv};
        const double s = c.norm();
        if (s > cutoff_n) continue;
        vcells.push_back({static_cast<int>(std::ceil(s)), ix, iy, iz});
      }
  std::stable_sort(vcells.begin(), vcells.end(), [](const VCell& a, const VCell& b) {
    if (a.shell != b.shell) return a.shell < b.shell;
    if (a.iz != b.iz) return a.iz < b.iz;
    if (a.iy != b.iy) return a.iy < b.iy;
    return a.ix < b.ix;
  });

  const int kmax = static_cast<int>(std::ceil(spec.r_max / hx));
  for (const auto& vc : vcells) {
    const Vec3 v{(vc.ix + 0.5) * hv, (vc.iy + 0.5) * hv, (vc.iz + 0.5) * hv};
    const double gv = params.c0 * std::exp(-params.lambda * v.norm2());
    if (gv * profile.sup() * cell_vol < floor_w) continue;
    for (int iz = -kmax - 1; iz <= kmax; ++iz)
      for (int iy = -kmax - 1; iy <= kmax; ++iy)
        for (int ix = -kmax - 1; ix <= kmax; ++ix) {
          const Vec3 x{(ix + 0.5) * hx, (iy + 0.5) * hx, (iz + 0.5) * hx};
          if (std::abs(x.x) > spec.r_max || std::abs(x.y) > spec.r_max ||
              std::abs(x.z) > spec.r_max)
            continue;
          const double w = gv * profile.eval(x.norm()) * cell_vol;
          if (w < floor_w || w <= 0.0) continue;
          ens.particles.push_back({x, v, w});
        }
  }
  return ens;
}

Ensemble apply_cutoff(const Ensemble& base, int n) {
  if (n > base.cutoff_n)
    throw std::invalid_argument("apply_cutoff: n exceeds base cutoff, cannot invent particles");
  Ensemble out = base;
  out.cutoff_n = n;
  out.particles.clear();
  for (const auto& p : base.particles)
    if (p.vel.norm() <= static_cast<double>(n)) out.particles.push_back(p);
  return out;
}

void save_ensemble(const Ensemble& ens, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "# ensemble 1 cutoff_n=" << ens.cutoff_n << " lambda=" << ens.params.lambda
    << " c0=" << ens.params.c0 << " epsilon=" << ens.params.epsilon
    << " c1=" << ens.params.c1 << " f_inf=" << ens.f_inf << "\n";
  f << "# px py pz vx vy vz weight\n";
  char buf[256];
  for (const auto& p : ens.particles) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", p.pos.x,
                  p.pos.y, p.pos.z, p.vel.x, p.vel.y, p.vel.z, p.weight);
    f << buf;
  }
}

Ensemble load_ensemble(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  Ensemble ens;
  std::string line;
  if (!std::getline(f, line) || line.rfind("# ensemble 1", 0) != 0)
    throw std::runtime_error("bad ensemble header in " + path);
  {
    std::istringstream h(line);
    std::string tok;
    while (h >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq);
      const double val = std::stod(tok.substr(eq + 1));
      if (key == "cutoff_n") ens.cutoff_n = static_cast<int>(val);
      else if (key == "lambda") ens.params.lambda = val;
      else if (key == "c0") ens.params.c0 = val;
      else if (key == "epsilon") ens.params.epsilon = val;
      else if (key == "c1") ens.params.c1 = val;
      else if (key == "f_inf") ens.f_inf = val;
    }
  }
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream s(line);
    Particle p;
    if (!(s >> p.pos.x >> p.pos.y >> p.pos.z >> p.vel.x >> p.vel.y >> p.vel.z >> p.weight))
      throw std::runtime_error("bad particle record in " + path);
    ens.particles.push_back(p);
  }
  return ens;
}

}  // namespace vp
