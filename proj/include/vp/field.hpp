#pragma once

#include <memory>
#include <span>
#include <vector>

#include "vp/phase_space.hpp"
#include "vp/vec3.hpp"

namespace vp {

struct Softening {
  double delta_s = 0.0;  // Plummer length; kernel denominator (r^2 + delta_s^2)^(3/2)

  void validate() const {
    if (!(delta_s >= 0.0)) throw std::invalid_argument("softening must be >= 0");
  }
};

struct FieldMethod {
  enum class Kind { Direct, Tree } kind = Kind::Direct;
  double theta = 0.3;  // tree opening criterion (cell size)/(distance) < theta

  static FieldMethod direct() { return {Kind::Direct, 0.0}; }
  static FieldMethod tree(double theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must be in (0,1)");
    return {Kind::Tree, theta};
  }
};

struct FieldSample {
  Vec3 point;
  Vec3 field;
  double magnitude = 0.0;
};

/// Barnes-Hut octree over a fixed (positions, weights) snapshot. Monopole cells only.
/// Build once, then evaluate fields or potentials at arbitrary query points.
class Octree {
 public:
  Octree(std::span<const Vec3> positions, std::span<const double> weights);

  Vec3 field_at(const Vec3& q, double theta, double delta_s) const;
  /// Softened potential sum w_j / sqrt(|q-y_j|^2 + delta_s^2).
  double potential_at(const Vec3& q, double theta, double delta_s) const;

 private:
  struct Node {
    Vec3 center;       // geometric center of the cube
    double half = 0.0; // half edge length
    Vec3 com;
    double mass = 0.0;
    double rmax = 0.0;  // max particle distance from com; tight opening radius
    int children[8];   // -1 when absent
    int first = -1, count = 0;  // leaf particle range in order_
  };
  std::vector<Node> nodes_;
  std::vector<Vec3> pos_;
  std::vector<double> w_;
  std::vector<int> order_;

  int build(std::vector<int>& idx, int begin, int end, const Vec3& center, double half,
            int depth);
};

/// Sum over sources of w (x-y)/(|x-y|^2+delta_s^2)^(3/2), Direct or tree-accelerated.
/// With delta_s = 0, a query coinciding with a source is a singularity error.
std::vector<FieldSample> eval_field(const Ensemble& state, std::span<const Vec3> queries,
                                    const FieldMethod& method, const Softening& soft);

std::vector<FieldSample> eval_field(std::span<const Vec3> positions,
                                    std::span<const double> weights,
                                    std::span<const Vec3> queries, const FieldMethod& method,
                                    const Softening& soft);

/// Magnitude-majorant shell sums of w/(|x-y|^2+delta_s^2), partitioned at radii a and
/// 3*r_big. Boundary ties go to the inner shell. Note these bound |E|, they are not the
/// signed vector field.
struct FieldSplit {
  double j1 = 0.0, j2 = 0.0, j3 = 0.0;
};
FieldSplit field_split(const Ensemble& state, const Vec3& x, double a, double r_big,
                       const Softening& soft);

struct ProbeResult {
  double separation = 0.0;
  double field_difference = 0.0;
  double modulus_ratio = 0.0;  // |E(x)-E(y)| / (|x-y| (|log|x-y||+1)); log regime only
  bool log_regime = false;     // separation < 1
};

struct ProbeReport {
  std::vector<ProbeResult> results;
  double sup_ratio = 0.0;  // empirical sup of modulus_ratio over log-regime pairs
};

/// Quasi-Lipschitz probe of the field modulus at given point pairs.
ProbeReport lipschitz_probe(const Ensemble& state,
                            std::span<const std::pair<Vec3, Vec3>> pairs,
                            const Softening& soft);

}  // namespace vp
