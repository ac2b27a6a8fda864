#ifndef WSNLOC_LOCALIZE3D_HPP
#define WSNLOC_LOCALIZE3D_HPP

#include "wsnloc/formation.hpp"
#include "wsnloc/geometry.hpp"
#include "wsnloc/network.hpp"

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

namespace wsnloc {

struct QuadrilaterationOptions {
  double err_mag = 0.0;
  /// Volume threshold below which four nodes count as coplanar.
  double kappa = 0.0;
  std::optional<std::size_t> seed_cap;
};

/// Queue-driven quadrilateration from the seed tetrahedron (a, b, c, d).
/// Returns nothing unless the four seeds are fully connected and their
/// measured distances classify as non-coplanar.
inline std::optional<PointFormation3> quadrilaterate_from_seeds(
    const WsnGraph& g, const std::array<NodeId, 4>& s, const QuadrilaterationOptions& opts = {}) {
  const auto ab = g.distance(s[0], s[1]), ac = g.distance(s[0], s[2]);
  const auto ad = g.distance(s[0], s[3]), bc = g.distance(s[1], s[2]);
  const auto bd = g.distance(s[1], s[3]), cd = g.distance(s[2], s[3]);
  if (!ab || !ac || !ad || !bc || !bd || !cd) return std::nullopt;
  const TetraDistances td{*ab, *ac, *ad, *bc, *bd, *cd};
  if (!is_non_coplanar(classify_tetra(td, opts.kappa))) return std::nullopt;
  SeedTetra seed;
  try {
    seed = place_seed_tetra(td);
  } catch (const GeometryError&) {
    return std::nullopt;
  }

  PointFormation3 f(g.size());
  f.seed_ids = {s.begin(), s.end()};
  f.assign(s[0], seed.a);
  f.assign(s[1], seed.b);
  f.assign(s[2], seed.c);
  f.assign(s[3], seed.d);

  std::vector<std::vector<NodeId>> localized_nbrs(g.size());
  std::deque<NodeId> queue{s.begin(), s.end()};
  while (!queue.empty()) {
    const NodeId i = queue.front();
    queue.pop_front();
    for (const auto& nb : g.neighbors(i)) {
      const NodeId j = nb.id;
      if (f.contains(j)) continue;
      auto& known = localized_nbrs[j];
      known.push_back(i);
      if (known.size() < 4) continue;
      const std::array<NodeId, 4> ids{known[0], known[1], known[2], known.back()};
      const Point3& p0 = *f.positions[ids[0]];
      const Point3& p1 = *f.positions[ids[1]];
      const Point3& p2 = *f.positions[ids[2]];
      const Point3& p3 = *f.positions[ids[3]];
      if (!is_non_coplanar(classify_points(p0, p1, p2, p3, opts.kappa))) continue;
      const std::array<Anchor3, 4> anchors{
          Anchor3{p0, *g.distance(j, ids[0])}, Anchor3{p1, *g.distance(j, ids[1])},
          Anchor3{p2, *g.distance(j, ids[2])}, Anchor3{p3, *g.distance(j, ids[3])}};
      if (auto p = quadrilaterate_point_3d(anchors, opts.err_mag)) {
        f.assign(j, *p, {ids.begin(), ids.end()});
        queue.push_back(j);
      }
    }
  }
  return f;
}

/// Tries fully-connected non-coplanar seed quadruples in ascending id order
/// and keeps the largest formation.
inline PointFormation3 quadrilaterate(const WsnGraph& g, const QuadrilaterationOptions& opts = {}) {
  PointFormation3 best(g.size());
  if (g.size() < 4) return best;
  std::size_t reachable = 0;
  for (NodeId v = 0; v < g.size(); ++v) reachable += g.degree(v) >= 3 ? 1 : 0;

  std::size_t tried = 0;
  std::vector<NodeId> common_ab;
  for (NodeId a = 0; a < g.size(); ++a) {
    for (const auto& nb : g.neighbors(a)) {
      const NodeId b = nb.id;
      if (b <= a) continue;
      common_ab.clear();
      for (const auto& nc : g.neighbors(b)) {
        if (nc.id > b && g.has_edge(a, nc.id)) common_ab.push_back(nc.id);
      }
      for (std::size_t ic = 0; ic < common_ab.size(); ++ic) {
        const NodeId c = common_ab[ic];
        for (std::size_t id = ic + 1; id < common_ab.size(); ++id) {
          const NodeId d = common_ab[id];
          if (!g.has_edge(c, d)) continue;
          if (opts.seed_cap && tried >= *opts.seed_cap) return best;
          auto f = quadrilaterate_from_seeds(g, {a, b, c, d}, opts);
          if (!f) continue;
          ++tried;
          if (f->size() > best.size()) best = std::move(*f);
          if (best.size() >= reachable) return best;
        }
      }
    }
  }
  return best;
}

}  // namespace wsnloc

#endif  // WSNLOC_LOCALIZE3D_HPP
