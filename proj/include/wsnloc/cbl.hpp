#ifndef WSNLOC_CBL_HPP
#define WSNLOC_CBL_HPP

// Coplanarity Based Localization. Every cluster is first localized in its own
// plane by trilateration; clusters are then placed in 3D one at a time from
// three support nodes whose global positions come from interplanar distances.

#include "wsnloc/formation.hpp"
#include "wsnloc/geometry.hpp"
#include "wsnloc/localize2d.hpp"
#include "wsnloc/network.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <limits>
#include <optional>
#include <tuple>
#include <vector>

namespace wsnloc {

enum class ClusterState { Unlocalized, SemiLocalized, RigidLocalized };

struct CblOptions {
  double err_mag = 0.0;
  double kappa = 0.0;
  /// Used for the in-plane trilateration and as the preferred minimum angle of
  /// support triangles.
  std::optional<double> robust_min_angle;
  /// Seed cap for the in-plane trilateration of each cluster.
  std::optional<std::size_t> seed_cap;
};

/// A cluster with its in-plane formation. `local` is indexed by graph node id.
struct CoplanarCluster {
  std::size_t id = 0;
  std::vector<NodeId> members;
  PointFormation2 local;
};

inline std::vector<CoplanarCluster> localize_clusters_2d(
    const WsnGraph& g, const std::vector<std::vector<NodeId>>& clusters, const CblOptions& opts) {
  TrilaterationOptions t;
  t.err_mag = opts.err_mag;
  t.robust_min_angle = opts.robust_min_angle;
  t.seed_cap = opts.seed_cap;
  std::vector<CoplanarCluster> out;
  out.reserve(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    std::vector<NodeId> members = clusters[i];
    std::sort(members.begin(), members.end());
    CoplanarCluster c{i, members, trilaterate_cluster(g, members, t)};
    out.push_back(std::move(c));
  }
  return out;
}

struct SupportCandidate {
  NodeId id;
  Point2 local;
  /// Interplanar edges to already globalized nodes.
  std::size_t score;
};

/// Best non-collinear triple: triangles meeting the preferred angle first, then
/// the largest total score, then the largest minimum angle, then the smallest
/// ids. When `required` is set the triple must contain it.
inline std::optional<std::array<NodeId, 3>> select_support_nodes(
    std::vector<SupportCandidate> candidates, std::optional<NodeId> required = std::nullopt,
    double preferred_angle = kDefaultRobustAngleDeg) {
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  using Key = std::tuple<bool, std::size_t, double>;
  std::optional<Key> best_key;
  std::optional<std::array<NodeId, 3>> best;
  const std::size_t n = candidates.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        const auto& a = candidates[i];
        const auto& b = candidates[j];
        const auto& c = candidates[k];
        if (required && a.id != *required && b.id != *required && c.id != *required) continue;
        const double angle = min_triangle_angle(a.local, b.local, c.local);
        if (angle < kCollinearAngleDeg) continue;
        const Key key{angle >= preferred_angle, a.score + b.score + c.score, angle};
        if (!best_key || key > *best_key) {
          best_key = key;
          best = std::array<NodeId, 3>{a.id, b.id, c.id};
        }
      }
    }
  }
  return best;
}

/// Mutable state of one (seed cluster, semi cluster) attempt.
class CblSession {
public:
  CblSession(const WsnGraph& g, const std::vector<CoplanarCluster>& clusters,
             const CblOptions& opts)
      : g_(g),
        clusters_(clusters),
        opts_(opts),
        cluster_of_(g.size(), -1),
        global_(g.size()),
        local_anchors_(g.size()),
        states_(clusters.size(), ClusterState::Unlocalized),
        supports_(clusters.size()),
        transforms_(clusters.size()),
        cache_(g.size()) {
    for (const auto& c : clusters_) {
      for (NodeId v : c.members) cluster_of_[v] = static_cast<int>(c.id);
    }
  }

  const std::vector<std::optional<Point3>>& global() const { return global_; }
  ClusterState state(std::size_t c) const { return states_[c]; }
  const std::vector<ClusterState>& states() const { return states_; }
  const std::optional<std::array<NodeId, 3>>& support(std::size_t c) const { return supports_[c]; }
  const std::optional<RigidTransform>& transform(std::size_t c) const { return transforms_[c]; }
  int cluster_of(NodeId v) const { return cluster_of_[v]; }

  /// Anchor ids used for each rigid localization of a support node.
  const std::vector<std::array<NodeId, 4>>& rigid_anchor_log() const { return rigid_anchor_log_; }

  /// Places the seed cluster's in-plane formation directly on z = 0.
  bool place_seed(std::size_t c) {
    const auto& cl = clusters_[c];
    if (cl.local.empty()) return false;
    for (NodeId v : cl.members) {
      if (cl.local.positions[v]) {
        global_[v] = lift(*cl.local.positions[v]);
        local_anchors_[v] = cl.local.anchors[v];
      }
    }
    states_[c] = ClusterState::RigidLocalized;
    return true;
  }

  /// Places `target` from distances to the seed cluster alone. The first support
  /// node has two mirror positions; the one with greater z is taken.
  bool semi_localize(std::size_t seed, std::size_t target) {
    if (states_[target] != ClusterState::Unlocalized) return false;
    const auto& tc = clusters_[target];
    if (tc.local.size() < 3) return false;
    const double min_angle = opts_.robust_min_angle.value_or(kCollinearAngleDeg);

    struct Option {
      NodeId id;
      std::vector<NodeId> seed_nbrs;
    };
    std::vector<Option> options;
    for (NodeId v : tc.members) {
      if (!tc.local.positions[v]) continue;
      Option o{v, {}};
      for (const auto& nb : g_.neighbors(v)) {
        if (cluster_of_[nb.id] == static_cast<int>(seed) && global_[nb.id]) o.seed_nbrs.push_back(nb.id);
      }
      if (o.seed_nbrs.size() >= 3) options.push_back(std::move(o));
    }
    if (options.size() < 3) return false;
    auto by_anchor_count = options;
    std::stable_sort(by_anchor_count.begin(), by_anchor_count.end(),
                     [](const Option& a, const Option& b) {
                       return a.seed_nbrs.size() > b.seed_nbrs.size();
                     });

    for (const auto& s : by_anchor_count) {
      const auto triple = first_non_collinear(s.seed_nbrs, min_angle);
      if (!triple) continue;
      const auto candidates = intersect_spheres(anchor(s.id, (*triple)[0]), anchor(s.id, (*triple)[1]),
                                                anchor(s.id, (*triple)[2]), opts_.err_mag);
      if (!candidates) continue;
      const Point3 s_pos =
          candidates->second.z() > candidates->first.z() ? candidates->second : candidates->first;

      std::vector<SupportCandidate> pool{
          SupportCandidate{s.id, *tc.local.positions[s.id], s.seed_nbrs.size()}};
      std::vector<std::pair<NodeId, Point3>> placed{{s.id, s_pos}};
      for (const auto& o : options) {
        if (o.id == s.id) continue;
        const auto d_s = g_.distance(o.id, s.id);
        if (!d_s) continue;
        const auto t = first_non_collinear(o.seed_nbrs, min_angle);
        if (!t) continue;
        const Point3& p0 = *global_[(*t)[0]];
        const Point3& p1 = *global_[(*t)[1]];
        const Point3& p2 = *global_[(*t)[2]];
        if (!is_non_coplanar(classify_points(p0, p1, p2, s_pos, opts_.kappa))) continue;
        const std::array<Anchor3, 4> anchors{anchor(o.id, (*t)[0]), anchor(o.id, (*t)[1]),
                                             anchor(o.id, (*t)[2]), Anchor3{s_pos, *d_s}};
        if (auto p = quadrilaterate_point_3d(anchors, opts_.err_mag)) {
          pool.push_back(SupportCandidate{o.id, *tc.local.positions[o.id], o.seed_nbrs.size()});
          placed.emplace_back(o.id, *p);
        }
      }
      const auto support = select_support_nodes(
          pool, s.id, opts_.robust_min_angle.value_or(kDefaultRobustAngleDeg));
      if (!support) continue;
      if (!globalize(target, *support, placed)) continue;
      states_[target] = ClusterState::SemiLocalized;
      return true;
    }
    return false;
  }

  /// Places `target` once three of its members are uniquely localized, each by
  /// four globally positioned, non-coplanar anchors.
  bool rigid_localize(std::size_t target) {
    if (states_[target] != ClusterState::Unlocalized) return false;
    const auto& tc = clusters_[target];
    if (tc.local.size() < 3) return false;
    std::vector<SupportCandidate> pool;
    std::vector<std::pair<NodeId, Point3>> placed;
    std::vector<std::array<NodeId, 4>> used;
    for (NodeId v : tc.members) {
      if (!tc.local.positions[v]) continue;
      const auto& r = unique_position(v);
      if (!r.position) continue;
      pool.push_back(SupportCandidate{v, *tc.local.positions[v], r.global_nbrs});
      placed.emplace_back(v, *r.position);
      used.push_back(r.anchors);
    }
    if (pool.size() < 3) return false;
    const auto support =
        select_support_nodes(pool, std::nullopt, opts_.robust_min_angle.value_or(kDefaultRobustAngleDeg));
    if (!support) return false;
    if (!globalize(target, *support, placed)) return false;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (std::find(support->begin(), support->end(), pool[i].id) != support->end()) {
        rigid_anchor_log_.push_back(used[i]);
      }
    }
    states_[target] = ClusterState::RigidLocalized;
    return true;
  }

  /// Runs the rigid-localization cascade seeded by the already placed clusters
  /// in `initial`. Neighbors of every newly globalized node are notified; an
  /// unlocalized cluster is retried whenever one of its members has at least
  /// four globalized neighbors.
  void cascade(const std::vector<std::size_t>& initial) {
    std::vector<std::size_t> count(g_.size(), 0);
    std::deque<std::size_t> queue(initial.begin(), initial.end());
    while (!queue.empty()) {
      const std::size_t ci = queue.front();
      queue.pop_front();
      for (NodeId v : clusters_[ci].members) {
        if (!global_[v]) continue;
        for (const auto& nb : g_.neighbors(v)) {
          const int cw = cluster_of_[nb.id];
          if (cw < 0 || states_[cw] != ClusterState::Unlocalized) continue;
          if (++count[nb.id] < 4) continue;
          if (rigid_localize(static_cast<std::size_t>(cw))) queue.push_back(static_cast<std::size_t>(cw));
        }
      }
    }
  }

  PointFormation3 formation() const {
    PointFormation3 f(g_.size());
    for (NodeId v = 0; v < g_.size(); ++v) {
      if (global_[v]) f.assign(v, *global_[v], local_anchors_[v]);
    }
    return f;
  }

private:
  struct UniqueResult {
    std::size_t global_nbrs = std::numeric_limits<std::size_t>::max();
    std::optional<Point3> position;
    std::array<NodeId, 4> anchors{};
  };

  Anchor3 anchor(NodeId node, NodeId from) const {
    return Anchor3{*global_[from], *g_.distance(node, from)};
  }

  /// First anchor triple (n0, n1, nk) whose global positions are not collinear.
  std::optional<std::array<NodeId, 3>> first_non_collinear(const std::vector<NodeId>& nbrs,
                                                           double min_angle) const {
    if (nbrs.size() < 3) return std::nullopt;
    for (std::size_t k = 2; k < nbrs.size(); ++k) {
      if (min_triangle_angle(*global_[nbrs[0]], *global_[nbrs[1]], *global_[nbrs[k]]) >= min_angle) {
        return std::array<NodeId, 3>{nbrs[0], nbrs[1], nbrs[k]};
      }
    }
    return std::nullopt;
  }

  /// Unique position of v from its globalized neighbors in other clusters,
  /// recomputed only when that neighbor set has grown.
  const UniqueResult& unique_position(NodeId v) {
    std::vector<NodeId> nbrs;
    for (const auto& nb : g_.neighbors(v)) {
      if (global_[nb.id] && cluster_of_[nb.id] != cluster_of_[v]) nbrs.push_back(nb.id);
    }
    UniqueResult& r = cache_[v];
    if (r.global_nbrs == nbrs.size()) return r;
    r = UniqueResult{};
    r.global_nbrs = nbrs.size();
    if (nbrs.size() < 4) return r;
    const double min_angle = opts_.robust_min_angle.value_or(kCollinearAngleDeg);
    for (std::size_t k = 2; k + 1 < nbrs.size() && !r.position; ++k) {
      const Point3& p0 = *global_[nbrs[0]];
      const Point3& p1 = *global_[nbrs[1]];
      const Point3& p2 = *global_[nbrs[k]];
      if (min_triangle_angle(p0, p1, p2) < min_angle) continue;
      for (std::size_t l = k + 1; l < nbrs.size(); ++l) {
        const Point3& p3 = *global_[nbrs[l]];
        if (!is_non_coplanar(classify_points(p0, p1, p2, p3, opts_.kappa))) continue;
        const std::array<Anchor3, 4> anchors{anchor(v, nbrs[0]), anchor(v, nbrs[1]),
                                             anchor(v, nbrs[k]), anchor(v, nbrs[l])};
        if (auto p = quadrilaterate_point_3d(anchors, opts_.err_mag)) {
          r.position = *p;
          r.anchors = {nbrs[0], nbrs[1], nbrs[k], nbrs[l]};
          break;
        }
      }
    }
    return r;
  }

  bool globalize(std::size_t c, const std::array<NodeId, 3>& support,
                 const std::vector<std::pair<NodeId, Point3>>& placed) {
    const auto& cl = clusters_[c];
    std::array<Point3, 3> local, global;
    for (int i = 0; i < 3; ++i) {
      local[i] = lift(*cl.local.positions[support[i]]);
      auto it = std::find_if(placed.begin(), placed.end(),
                             [&](const auto& p) { return p.first == support[i]; });
      global[i] = it->second;
    }
    RigidTransform t;
    try {
      t = build_transform(local, global);
    } catch (const GeometryError&) {
      return false;
    }
    for (NodeId v : cl.members) {
      if (!cl.local.positions[v]) continue;
      global_[v] = apply_transform(t, lift(*cl.local.positions[v]));
      local_anchors_[v] = cl.local.anchors[v];
    }
    supports_[c] = support;
    transforms_[c] = t;
    return true;
  }

  const WsnGraph& g_;
  const std::vector<CoplanarCluster>& clusters_;
  CblOptions opts_;
  std::vector<int> cluster_of_;
  std::vector<std::optional<Point3>> global_;
  std::vector<std::vector<NodeId>> local_anchors_;
  std::vector<ClusterState> states_;
  std::vector<std::optional<std::array<NodeId, 3>>> supports_;
  std::vector<std::optional<RigidTransform>> transforms_;
  std::vector<UniqueResult> cache_;
  std::vector<std::array<NodeId, 4>> rigid_anchor_log_;
};

struct CblResult {
  PointFormation3 formation;
  std::vector<ClusterState> states;
  std::optional<std::size_t> seed_cluster;
  std::optional<std::size_t> semi_cluster;
};

/// Full CBL over already localized clusters: every ordered (seed, semi) pair
/// is tried and the largest 3D formation is kept.
inline CblResult cbl(const WsnGraph& g, const std::vector<CoplanarCluster>& clusters,
                     const CblOptions& opts) {
  CblResult best{PointFormation3(g.size()), std::vector<ClusterState>(clusters.size()), {}, {}};
  if (clusters.empty()) return best;
  if (clusters.size() == 1) {
    CblSession s(g, clusters, opts);
    if (s.place_seed(0)) {
      best.formation = s.formation();
      best.states = s.states();
      best.seed_cluster = 0;
    }
    return best;
  }
  std::size_t reachable = 0;
  for (const auto& c : clusters) reachable += c.local.size();

  for (std::size_t seed = 0; seed < clusters.size(); ++seed) {
    if (clusters[seed].local.empty()) continue;
    for (std::size_t semi = 0; semi < clusters.size(); ++semi) {
      if (semi == seed || clusters[semi].local.size() < 3) continue;
      CblSession s(g, clusters, opts);
      s.place_seed(seed);
      if (!s.semi_localize(seed, semi)) continue;
      s.cascade({seed, semi});
      PointFormation3 f = s.formation();
      if (f.size() > best.formation.size()) {
        best.formation = std::move(f);
        best.states = s.states();
        best.seed_cluster = seed;
        best.semi_cluster = semi;
      }
      if (best.formation.size() >= reachable) return best;
    }
  }
  return best;
}

inline CblResult cbl(const WsnGraph& g, const std::vector<std::vector<NodeId>>& clusters,
                     const CblOptions& opts) {
  return cbl(g, localize_clusters_2d(g, clusters, opts), opts);
}

}  // namespace wsnloc

#endif  // WSNLOC_CBL_HPP
