#ifndef WSNLOC_CLUSTERING_HPP
#define WSNLOC_CLUSTERING_HPP

// Distance-only extraction of coplanar clusters. Four mutually close nodes
// whose tetrahedron volume is below kappa seed a cluster; the cluster then
// absorbs every off-plane node that is coplanar with some member triple and
// within theta of it, with theta relaxed step by step up to the sensing range.

#include "wsnloc/geometry.hpp"
#include "wsnloc/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace wsnloc {

inline double volume_threshold(double err_mag) {
  if (err_mag < 0.0) throw std::invalid_argument("error magnitude must be >= 0");
  return 6.0 * std::log(1.0 + err_mag);
}

/// Half the mean measured edge length.
inline double initial_hop_distance(const WsnGraph& g) {
  const std::size_t m = g.edge_count();
  if (m == 0) throw std::invalid_argument("graph has no edges");
  double total = 0.0;
  g.for_each_edge([&](NodeId, NodeId, double d) { total += d; });
  return total / (2.0 * static_cast<double>(m));
}

struct ClusterParams {
  double kappa = 0.0;
  double theta = 0.0;
  double theta_increment = 1.0;
  double theta_max = 0.0;
};

/// Cluster parameters for a graph: kappa from the error magnitude, theta from
/// the edge weights, increment one unit of a 100-unit cube.
inline ClusterParams default_cluster_params(const WsnGraph& g, double err_mag, double side = 100.0) {
  return {volume_threshold(err_mag), initial_hop_distance(g), side / 100.0, g.range()};
}

struct ClusteringResult {
  std::vector<std::vector<NodeId>> clusters;  // members in ascending id order
  std::vector<NodeId> residual;
  ClusterParams params;
};

/// Extends clusters over an off-plane pool. Membership tests depend only on the
/// member set within theta of the candidate, which only grows, so each
/// (cluster, candidate) pair remembers the triples it has already rejected.
class ClusterExtender {
public:
  ClusterExtender(const WsnGraph& g, double kappa) : g_(g), kappa_(kappa) {}

  /// Adds to `members` (and removes from `off_plane`) every node that is
  /// coplanar with some member triple within theta, repeating until a pass adds
  /// nothing. Returns the number of nodes added.
  std::size_t extend(std::size_t cluster_key, std::vector<NodeId>& members,
                     std::set<NodeId>& off_plane, double theta) {
    auto& memo = memo_[cluster_key];
    std::size_t added = 0;
    for (;;) {
      std::vector<NodeId> newbies;
      for (NodeId d : off_plane) {
        if (coplanar_with_some_triple(memo[d], members, d, theta)) newbies.push_back(d);
      }
      if (newbies.empty()) break;
      for (NodeId d : newbies) {
        off_plane.erase(d);
        members.push_back(d);
        memo.erase(d);
      }
      added += newbies.size();
    }
    return added;
  }

private:
  struct Memo {
    std::vector<NodeId> near;  // members within theta, in insertion order
    std::size_t checked = 0;   // triples among near[0..checked) all failed
  };

  bool coplanar_with_some_triple(Memo& m, const std::vector<NodeId>& members, NodeId d,
                                 double theta) {
    for (NodeId a : members) {
      if (std::find(m.near.begin(), m.near.end(), a) != m.near.end()) continue;
      const auto da = g_.distance(a, d);
      if (da && *da <= theta) m.near.push_back(a);
    }
    const auto& near = m.near;
    for (std::size_t k = std::max<std::size_t>(m.checked, 2); k < near.size(); ++k) {
      for (std::size_t j = 1; j < k; ++j) {
        for (std::size_t i = 0; i < j; ++i) {
          if (coplanar(near[i], near[j], near[k], d)) {
            m.checked = k;  // leave the hit unmarked so the state stays valid
            return true;
          }
        }
      }
      m.checked = k + 1;
    }
    return false;
  }

  bool coplanar(NodeId a, NodeId b, NodeId c, NodeId d) const {
    const auto ab = g_.distance(a, b), ac = g_.distance(a, c), bc = g_.distance(b, c);
    if (!ab || !ac || !bc) return false;
    const TetraDistances t{*ab, *ac, *g_.distance(a, d), *bc, *g_.distance(b, d), *g_.distance(c, d)};
    return is_coplanar(classify_tetra(t, kappa_));
  }

  const WsnGraph& g_;
  double kappa_;
  std::unordered_map<std::size_t, std::unordered_map<NodeId, Memo>> memo_;
};

/// Single extension of one member set at fixed theta and kappa.
inline std::size_t extend_cluster(std::vector<NodeId>& members, std::set<NodeId>& off_plane,
                                  const WsnGraph& g, double theta, double kappa) {
  ClusterExtender ext(g, kappa);
  return ext.extend(0, members, off_plane, theta);
}

inline ClusteringResult extract_clusters(const WsnGraph& g, const ClusterParams& params) {
  if (g.size() < 4) throw std::invalid_argument("clustering needs at least 4 nodes");
  ClusteringResult out;
  out.params = params;
  double theta = params.theta;

  std::vector<NodeId> order(g.size());
  for (NodeId v = 0; v < g.size(); ++v) order[v] = v;
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return g.degree(a) < g.degree(b); });
  std::vector<std::size_t> rank(g.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

  std::set<NodeId> off_plane(order.begin(), order.end());
  ClusterExtender ext(g, params.kappa);

  // Neighbors within theta that come later in the connectivity order.
  auto later_close = [&](NodeId v) {
    std::vector<NodeId> out_nbrs;
    for (const auto& nb : g.neighbors(v)) {
      if (rank[nb.id] > rank[v] && nb.distance <= theta) out_nbrs.push_back(nb.id);
    }
    std::sort(out_nbrs.begin(), out_nbrs.end(),
              [&](NodeId x, NodeId y) { return rank[x] < rank[y]; });
    return out_nbrs;
  };
  auto close = [&](NodeId x, NodeId y) {
    const auto d = g.distance(x, y);
    return d && *d <= theta;
  };

  for (std::size_t ia = 0; ia < order.size(); ++ia) {
    const NodeId a = order[ia];
    if (!off_plane.count(a)) continue;
    const auto na = later_close(a);
    bool a_taken = false;
    for (std::size_t ib = 0; ib < na.size() && !a_taken; ++ib) {
      const NodeId b = na[ib];
      if (!off_plane.count(b)) continue;
      for (std::size_t ic = ib + 1; ic < na.size() && !a_taken; ++ic) {
        const NodeId c = na[ic];
        if (!off_plane.count(c) || !off_plane.count(b) || !close(b, c)) continue;
        for (std::size_t id = ic + 1; id < na.size(); ++id) {
          const NodeId d = na[id];
          if (!off_plane.count(d) || !close(b, d) || !close(c, d)) continue;
          const TetraDistances t{*g.distance(a, b), *g.distance(a, c), *g.distance(a, d),
                                 *g.distance(b, c), *g.distance(b, d), *g.distance(c, d)};
          if (!is_coplanar(classify_tetra(t, params.kappa))) continue;
          std::vector<NodeId> members{a, b, c, d};
          for (NodeId v : members) off_plane.erase(v);
          ext.extend(out.clusters.size(), members, off_plane, theta);
          out.clusters.push_back(std::move(members));
          a_taken = true;
          break;
        }
      }
    }
  }

  while (!off_plane.empty() && theta <= params.theta_max) {
    theta += params.theta_increment;
    for (std::size_t i = 0; i < out.clusters.size(); ++i) {
      ext.extend(i, out.clusters[i], off_plane, theta);
    }
  }

  for (auto& c : out.clusters) std::sort(c.begin(), c.end());
  out.residual.assign(off_plane.begin(), off_plane.end());
  return out;
}

inline ClusteringResult extract_clusters(const WsnGraph& g, double err_mag, double side = 100.0) {
  return extract_clusters(g, default_cluster_params(g, err_mag, side));
}

}  // namespace wsnloc

#endif  // WSNLOC_CLUSTERING_HPP
