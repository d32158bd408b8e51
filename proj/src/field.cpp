#include "vp/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vp {

namespace {

constexpr int kLeafSize = 16;

inline Vec3 kernel(const Vec3& d, double d2, double eps2) {
  const double r2 = d2 + eps2;
  const double inv = 1.0 / (r2 * std::sqrt(r2));
  return d * inv;
}

}  // namespace

Octree::Octree(std::span<const Vec3> positions, std::span<const double> weights)
    : pos_(positions.begin(), positions.end()), w_(weights.begin(), weights.end()) {
  if (pos_.size() != w_.size()) throw std::invalid_argument("positions/weights size mismatch");
  if (pos_.empty()) return;
  Vec3 lo = pos_[0], hi = pos_[0];
  for (const auto& p : pos_) {
    lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y); lo.z = std::min(lo.z, p.z);
    hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y); hi.z = std::max(hi.z, p.z);
  }
  const Vec3 center = 0.5 * (lo + hi);
  double half = 0.5 * std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
  half = std::max(half, 1e-12) * (1.0 + 1e-12);
  std::vector<int> idx(pos_.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  nodes_.reserve(2 * pos_.size() / kLeafSize + 16);
  build(idx, 0, static_cast<int>(idx.size()), center, half, 0);
  order_ = std::move(idx);
}

int Octree::build(std::vector<int>& idx, int begin, int end, const Vec3& center, double half,
                  int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  {
    Node& n = nodes_.back();
    n.center = center;
    n.half = half;
    std::fill(std::begin(n.children), std::end(n.children), -1);
    Vec3 com{};
    double mass = 0.0;
    for (int i = begin; i < end; ++i) {
      mass += w_[idx[i]];
      com += w_[idx[i]] * pos_[idx[i]];
    }
    n.mass = mass;
    n.com = mass > 0.0 ? (1.0 / mass) * com : center;
    for (int i = begin; i < end; ++i)
      n.rmax = std::max(n.rmax, (pos_[idx[i]] - n.com).norm());
  }
  if (end - begin <= kLeafSize || depth > 48) {
    nodes_[id].first = begin;
    nodes_[id].count = end - begin;
    return id;
  }
  // partition into octants; stable to keep build deterministic
  int bounds[9];
  bounds[0] = begin;
  auto octant = [&](int i) {
    const Vec3& p = pos_[i];
    return (p.x >= center.x ? 1 : 0) | (p.y >= center.y ? 2 : 0) | (p.z >= center.z ? 4 : 0);
  };
  std::stable_sort(idx.begin() + begin, idx.begin() + end,
                   [&](int a, int b) { return octant(a) < octant(b); });
  int cur = begin;
  for (int o = 0; o < 8; ++o) {
    while (cur < end && octant(idx[cur]) == o) ++cur;
    bounds[o + 1] = cur;
  }
  for (int o = 0; o < 8; ++o) {
    if (bounds[o + 1] == bounds[o]) continue;
    const Vec3 c{center.x + (o & 1 ? 0.5 : -0.5) * half,
                 center.y + (o & 2 ? 0.5 : -0.5) * half,
                 center.z + (o & 4 ? 0.5 : -0.5) * half};
    const int child = build(idx, bounds[o], bounds[o + 1], c, 0.5 * half, depth + 1);
    nodes_[id].children[o] = child;
  }
  return id;
}

Vec3 Octree::field_at(const Vec3& q, double theta, double delta_s) const {
  if (nodes_.empty()) return {};
  const double eps2 = delta_s * delta_s;
  Vec3 acc{};
  // explicit stack traversal
  int stack[512];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (n.mass <= 0.0) continue;
    const Vec3 d = q - n.com;
    const double d2 = d.norm2();
    const double size = 2.0 * n.rmax;
    if (n.count >= 0 && n.first >= 0) {  // leaf
      for (int i = n.first; i < n.first + n.count; ++i) {
        const int j = order_[i];
        const Vec3 dj = q - pos_[j];
        const double dj2 = dj.norm2();
        if (dj2 == 0.0 && eps2 == 0.0)
          throw std::domain_error("singularity: query coincides with source " +
                                  std::to_string(j));
        if (dj2 == 0.0) continue;  // softened self term is exactly zero
        acc += w_[j] * kernel(dj, dj2, eps2);
      }
      continue;
    }
    if (size * size < theta * theta * d2) {
      acc += n.mass * kernel(d, d2, eps2);
    } else {
      for (int c : n.children)
        if (c >= 0) stack[top++] = c;
    }
  }
  return acc;
}

double Octree::potential_at(const Vec3& q, double theta, double delta_s) const {
  if (nodes_.empty()) return 0.0;
  const double eps2 = delta_s * delta_s;
  double acc = 0.0;
  int stack[512];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (n.mass <= 0.0) continue;
    const Vec3 d = q - n.com;
    const double d2 = d.norm2();
    const double size = 2.0 * n.rmax;
    if (n.count >= 0 && n.first >= 0) {
      for (int i = n.first; i < n.first + n.count; ++i) {
        const int j = order_[i];
        const double dj2 = (q - pos_[j]).norm2();
        if (dj2 == 0.0 && eps2 == 0.0)
          throw std::domain_error("singularity: query coincides with source " +
                                  std::to_string(j));
        acc += w_[j] / std::sqrt(dj2 + eps2);
      }
      continue;
    }
    if (size * size < theta * theta * d2) {
      acc += n.mass / std::sqrt(d2 + eps2);
    } else {
      for (int c : n.children)
        if (c >= 0) stack[top++] = c;
    }
  }
  return acc;
}

std::vector<FieldSample> eval_field(std::span<const Vec3> positions,
                                    std::span<const double> weights,
                                    std::span<const Vec3> queries, const FieldMethod& method,
                                    const Softening& soft) {
  soft.validate();
  const double eps2 = soft.delta_s * soft.delta_s;
  std::vector<FieldSample> out(queries.size());
  double total = 0.0;
  for (double w : weights) total += w;

  if (method.kind == FieldMethod::Kind::Tree && total > 0.0) {
    Octree tree(positions, weights);
    for (size_t k = 0; k < queries.size(); ++k) {
      const Vec3 e = tree.field_at(queries[k], method.theta, soft.delta_s);
      out[k] = {queries[k], e, e.norm()};
    }
    return out;
  }
  for (size_t k = 0; k < queries.size(); ++k) {
    const Vec3& q = queries[k];
    if (!q.finite()) throw std::invalid_argument("non-finite query point");
    Vec3 e{};
    for (size_t j = 0; j < positions.size(); ++j) {
      const Vec3 d = q - positions[j];
      const double d2 = d.norm2();
      if (d2 == 0.0) {
        if (eps2 == 0.0)
          throw std::domain_error("singularity: query " + std::to_string(k) +
                                  " coincides with source " + std::to_string(j));
        continue;
      }
      e += weights[j] * kernel(d, d2, eps2);
    }
    out[k] = {q, e, e.norm()};
  }
  return out;
}

std::vector<FieldSample> eval_field(const Ensemble& state, std::span<const Vec3> queries,
                                    const FieldMethod& method, const Softening& soft) {
  std::vector<Vec3> pos(state.particles.size());
  std::vector<double> w(state.particles.size());
  for (size_t i = 0; i < state.particles.size(); ++i) {
    pos[i] = state.particles[i].pos;
    w[i] = state.particles[i].weight;
  }
  return eval_field(pos, w, queries, method, soft);
}

FieldSplit field_split(const Ensemble& state, const Vec3& x, double a, double r_big,
                       const Softening& soft) {
  if (!(a > 0.0 && a < 1.0 && r_big >= 1.0))
    throw std::invalid_argument("field_split requires 0 < a < 1 <= r_big");
  const double eps2 = soft.delta_s * soft.delta_s;
  FieldSplit s;
  for (const auto& p : state.particles) {
    const double d2 = (x - p.pos).norm2();
    if (d2 == 0.0 && eps2 == 0.0)
      throw std::domain_error("singularity: split point coincides with source");
    const double term = p.weight / (d2 + eps2);
    const double r = std::sqrt(d2);
    if (r <= a) s.j1 += term;
    else if (r <= 3.0 * r_big) s.j2 += term;
    else s.j3 += term;
  }
  return s;
}

ProbeReport lipschitz_probe(const Ensemble& state,
                            std::span<const std::pair<Vec3, Vec3>> pairs,
                            const Softening& soft) {
  ProbeReport rep;
  std::vector<Vec3> queries;
  queries.reserve(2 * pairs.size());
  for (const auto& [x, y] : pairs) {
    if ((x - y).norm2() == 0.0) throw std::invalid_argument("degenerate probe pair x == y");
    queries.push_back(x);
    queries.push_back(y);
  }
  const auto fields = eval_field(state, queries, FieldMethod::direct(), soft);
  for (size_t i = 0; i < pairs.size(); ++i) {
    const double sep = (pairs[i].first - pairs[i].second).norm();
    const double diff = (fields[2 * i].field - fields[2 * i + 1].field).norm();
    ProbeResult r;
    r.separation = sep;
    r.field_difference = diff;
    r.log_regime = sep < 1.0;
    if (r.log_regime) {
      r.modulus_ratio = diff / (sep * (std::abs(std::log(sep)) + 1.0));
      rep.sup_ratio = std::max(rep.sup_ratio, r.modulus_ratio);
    }
    rep.results.push_back(r);
  }
  return rep;
}

}  // namespace vp
