#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vp/vec3.hpp"

namespace vp {

/// Physical parameters of the initial-data class: f0(x,v) <= c0 exp(-lambda |v|^2) g(|x|),
/// with g carrying a lattice-decay certificate (epsilon, c1).
struct PhysParams {
  double lambda = 1.0;   // Gaussian velocity rate
  double c0 = 1.0;       // amplitude
  double epsilon = 0.5;  // spatial decay exponent, must lie in (1/15, 1)
  double c1 = 1.0;       // lattice-decay constant

  void validate() const;
};

enum class ProfileKind { PowerLaw, SparsePlateaus };

struct Plateau {
  double center = 0.0;     // radial center
  double halfwidth = 0.0;  // plateau extends over [center-halfwidth, center+halfwidth]
  double height = 0.0;
};

/// Radial spatial profile g(r). PowerLaw is c*min(1, r^-(2+eps)): bounded, continuous,
/// non-increasing. SparsePlateaus is piecewise constant over sparse radial bands and
/// must pass the lattice-decay audit before use.
struct DecayProfile {
  ProfileKind kind = ProfileKind::PowerLaw;
  double c = 1.0;
  double epsilon = 0.5;
  std::vector<Plateau> plateaus;

  double eval(double r) const;
  double sup() const;

  static DecayProfile power_law(double c, double epsilon) {
    DecayProfile p;
    p.kind = ProfileKind::PowerLaw;
    p.c = c;
    p.epsilon = epsilon;
    return p;
  }
  static DecayProfile sparse_plateaus(std::vector<Plateau> ps) {
    DecayProfile p;
    p.kind = ProfileKind::SparsePlateaus;
    p.plateaus = std::move(ps);
    return p;
  }
};

struct Particle {
  Vec3 pos;
  Vec3 vel;
  double weight = 0.0;  // phase-space mass: f0 * cell volume
};

/// Deterministic stratified sampling grid. Cell centers sit at (i+1/2)*h on a global
/// grid independent of the cutoff, so ensembles are nested across N.
struct SamplingSpec {
  double r_max = 4.0;              // spatial box half-side
  double h_x = 1.0;                // spatial cell size
  double h_v = 1.0;                // velocity cell size
  std::uint64_t seed = 0;          // reserved for derived randomized diagnostics
  double weight_floor_rel = 1e-16; // drop cells below this fraction of the max cell weight

  void validate() const;
};

struct Ensemble {
  std::vector<Particle> particles;
  int cutoff_n = 1;
  PhysParams params;
  DecayProfile profile;
  SamplingSpec sampling;
  double f_inf = 0.0;  // ||f0||_Linf = c0 * sup g

  double total_weight() const;
};

/// f0(x,v) = c0 exp(-lambda |v|^2) g(|x|).
double eval_initial_density(const DecayProfile& profile, const PhysParams& params,
                            const Vec3& x, const Vec3& v);

/// One particle per phase-space cell center, weight f0^N(center) * h_x^3 * h_v^3.
/// Particle order is (velocity shell, velocity cell, spatial cell), which makes the
/// N-ensemble a prefix of the (N+1)-ensemble from the same spec.
Ensemble sample_ensemble(const DecayProfile& profile, const PhysParams& params,
                         const SamplingSpec& spec, int cutoff_n);

/// Retains exactly the particles with |vel| <= n. Errors if n exceeds base.cutoff_n.
Ensemble apply_cutoff(const Ensemble& base, int n);

void save_ensemble(const Ensemble& ens, const std::string& path);
Ensemble load_ensemble(const std::string& path);

}  // namespace vp
