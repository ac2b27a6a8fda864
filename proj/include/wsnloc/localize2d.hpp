#ifndef WSNLOC_LOCALIZE2D_HPP
#define WSNLOC_LOCALIZE2D_HPP

#include "wsnloc/formation.hpp"
#include "wsnloc/geometry.hpp"
#include "wsnloc/network.hpp"

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

namespace wsnloc {

struct TrilaterationOptions {
  double err_mag = 0.0;
  /// When set, anchor triangles with a smaller minimum angle (degrees) are not
  /// used to localize a node.
  std::optional<double> robust_min_angle;
  /// Maximum number of seed triples tried; unlimited when unset.
  std::optional<std::size_t> seed_cap;
};

/// Localizes as much of g as possible from the seed triangle (a, b, c) by
/// queue-driven trilateration. Returns nothing when the seeds are not a
/// fully-connected, non-collinear triple.
inline std::optional<PointFormation2> trilaterate_from_seeds(const WsnGraph& g, NodeId a, NodeId b,
                                                             NodeId c,
                                                             const TrilaterationOptions& opts = {}) {
  const auto ab = g.distance(a, b), ac = g.distance(a, c), bc = g.distance(b, c);
  if (!ab || !ac || !bc) return std::nullopt;
  SeedTriangle seed;
  try {
    seed = place_seed_triangle(*ab, *ac, *bc);
  } catch (const GeometryError&) {
    return std::nullopt;
  }
  if (min_triangle_angle(seed.a, seed.b, seed.c) < kCollinearAngleDeg) return std::nullopt;

  const double min_angle = opts.robust_min_angle.value_or(kCollinearAngleDeg);
  PointFormation2 f(g.size());
  f.seed_ids = {a, b, c};
  f.assign(a, seed.a);
  f.assign(b, seed.b);
  f.assign(c, seed.c);

  std::vector<std::vector<NodeId>> localized_nbrs(g.size());
  std::deque<NodeId> queue{a, b, c};
  while (!queue.empty()) {
    const NodeId i = queue.front();
    queue.pop_front();
    for (const auto& nb : g.neighbors(i)) {
      const NodeId j = nb.id;
      if (f.contains(j)) continue;
      auto& known = localized_nbrs[j];
      known.push_back(i);
      if (known.size() < 3) continue;
      const std::array<NodeId, 3> ids{known[0], known[1], known.back()};
      const Point2& p0 = *f.positions[ids[0]];
      const Point2& p1 = *f.positions[ids[1]];
      const Point2& p2 = *f.positions[ids[2]];
      if (min_triangle_angle(p0, p1, p2) < min_angle) continue;
      const std::array<Anchor2, 3> anchors{Anchor2{p0, *g.distance(j, ids[0])},
                                           Anchor2{p1, *g.distance(j, ids[1])},
                                           Anchor2{p2, *g.distance(j, ids[2])}};
      if (auto p = trilaterate_point_2d(anchors, opts.err_mag)) {
        f.assign(j, *p, {ids.begin(), ids.end()});
        queue.push_back(j);
      }
    }
  }
  return f;
}

/// Tries fully-connected seed triples in ascending id order and keeps the
/// largest formation; stops at the first one that reaches every node that
/// could possibly be localized.
inline PointFormation2 trilaterate(const WsnGraph& g, const TrilaterationOptions& opts = {}) {
  PointFormation2 best(g.size());
  if (g.size() < 3) return best;
  // Seeds need two neighbors, every other node three.
  std::size_t reachable = 0;
  for (NodeId v = 0; v < g.size(); ++v) reachable += g.degree(v) >= 2 ? 1 : 0;

  std::size_t tried = 0;
  for (NodeId a = 0; a < g.size(); ++a) {
    for (const auto& nb : g.neighbors(a)) {
      const NodeId b = nb.id;
      if (b <= a) continue;
      for (const auto& nc : g.neighbors(b)) {
        const NodeId c = nc.id;
        if (c <= b || !g.has_edge(a, c)) continue;
        if (opts.seed_cap && tried >= *opts.seed_cap) return best;
        auto f = trilaterate_from_seeds(g, a, b, c, opts);
        if (!f) continue;
        ++tried;
        if (f->size() > best.size()) best = std::move(*f);
        if (best.size() >= reachable) return best;
      }
    }
  }
  return best;
}

/// Trilateration restricted to the subgraph induced by `members`. The result
/// is indexed by the ids of g.
inline PointFormation2 trilaterate_cluster(const WsnGraph& g, const std::vector<NodeId>& members,
                                           const TrilaterationOptions& opts = {}) {
  const InducedSubgraph sub = induced_subgraph(g, members);
  const PointFormation2 local = trilaterate(sub.graph, opts);
  PointFormation2 out(g.size());
  for (NodeId i = 0; i < local.node_count(); ++i) {
    if (!local.positions[i]) continue;
    std::vector<NodeId> by;
    for (NodeId a : local.anchors[i]) by.push_back(sub.to_parent[a]);
    out.assign(sub.to_parent[i], *local.positions[i], std::move(by));
  }
  for (NodeId s : local.seed_ids) out.seed_ids.push_back(sub.to_parent[s]);
  return out;
}

}  // namespace wsnloc

#endif  // WSNLOC_LOCALIZE2D_HPP
