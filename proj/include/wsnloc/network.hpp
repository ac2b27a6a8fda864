#ifndef WSNLOC_NETWORK_HPP
#define WSNLOC_NETWORK_HPP

#include "wsnloc/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace wsnloc {

using NodeId = std::size_t;
using Rng = std::mt19937_64;

/// Ground truth of one simulated deployment.
struct Deployment {
  std::vector<Point3> positions;
  std::vector<int> cluster_labels;  // empty when the deployment carries none
  double side = 100.0;
  int k = -1;

  std::size_t size() const { return positions.size(); }
  bool has_labels() const { return !cluster_labels.empty(); }

  /// Node ids grouped by cluster label, in ascending id order.
  std::vector<std::vector<NodeId>> clusters() const {
    std::vector<std::vector<NodeId>> out(k > 0 ? static_cast<std::size_t>(k) : 0);
    for (NodeId v = 0; v < cluster_labels.size(); ++v) {
      const int label = cluster_labels[v];
      if (label < 0) continue;
      if (static_cast<std::size_t>(label) >= out.size()) out.resize(label + 1);
      out[label].push_back(v);
    }
    return out;
  }
};

struct Neighbor {
  NodeId id;
  double distance;
};

/// Undirected graph of measured distances. Neighbor lists are sorted by id.
class WsnGraph {
public:
  WsnGraph() = default;
  explicit WsnGraph(std::size_t n, double range = 0.0) : range_(range), adj_(n) {}

  std::size_t size() const { return adj_.size(); }
  double range() const { return range_; }
  void set_range(double r) { range_ = r; }

  std::size_t edge_count() const {
    std::size_t total = 0;
    for (const auto& list : adj_) total += list.size();
    return total / 2;
  }

  const std::vector<Neighbor>& neighbors(NodeId v) const { return adj_[v]; }
  std::size_t degree(NodeId v) const { return adj_[v].size(); }

  std::optional<double> distance(NodeId v, NodeId w) const {
    const auto& list = adj_[v];
    auto it = std::lower_bound(list.begin(), list.end(), w,
                               [](const Neighbor& n, NodeId id) { return n.id < id; });
    if (it == list.end() || it->id != w) return std::nullopt;
    return it->distance;
  }

  bool has_edge(NodeId v, NodeId w) const { return distance(v, w).has_value(); }

  /// Inserts or overwrites the undirected edge (v, w).
  void set_edge(NodeId v, NodeId w, double d) {
    if (v == w) throw std::invalid_argument("self-loop on node " + std::to_string(v));
    if (v >= size() || w >= size()) throw std::out_of_range("edge endpoint out of range");
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument("edge distance must be positive and finite");
    }
    upsert(adj_[v], w, d);
    upsert(adj_[w], v, d);
  }

  /// Calls f(v, w, d) once per undirected edge with v < w, in (v, w) order.
  template <typename F>
  void for_each_edge(F&& f) const {
    for (NodeId v = 0; v < adj_.size(); ++v) {
      for (const auto& nb : adj_[v]) {
        if (nb.id > v) f(v, nb.id, nb.distance);
      }
    }
  }

  double average_degree() const {
    return adj_.empty() ? 0.0 : 2.0 * static_cast<double>(edge_count()) / adj_.size();
  }

  bool is_connected() const {
    if (adj_.empty()) return true;
    std::vector<char> seen(adj_.size(), 0);
    std::vector<NodeId> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      for (const auto& nb : adj_[v]) {
        if (!seen[nb.id]) {
          seen[nb.id] = 1;
          ++count;
          stack.push_back(nb.id);
        }
      }
    }
    return count == adj_.size();
  }

  friend bool operator==(const WsnGraph& a, const WsnGraph& b) {
    if (a.range_ != b.range_ || a.adj_.size() != b.adj_.size()) return false;
    for (std::size_t v = 0; v < a.adj_.size(); ++v) {
      const auto& x = a.adj_[v];
      const auto& y = b.adj_[v];
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].id != y[i].id || x[i].distance != y[i].distance) return false;
      }
    }
    return true;
  }

private:
  static void upsert(std::vector<Neighbor>& list, NodeId id, double d) {
    auto it = std::lower_bound(list.begin(), list.end(), id,
                               [](const Neighbor& n, NodeId x) { return n.id < x; });
    if (it != list.end() && it->id == id) {
      it->distance = d;
    } else {
      list.insert(it, Neighbor{id, d});
    }
  }

  double range_ = 0.0;
  std::vector<std::vector<Neighbor>> adj_;
};

/// Subgraph induced by `members`; local id i corresponds to members[i].
struct InducedSubgraph {
  WsnGraph graph;
  std::vector<NodeId> to_parent;
};

inline InducedSubgraph induced_subgraph(const WsnGraph& g, const std::vector<NodeId>& members) {
  InducedSubgraph out{WsnGraph(members.size(), g.range()), members};
  std::vector<std::size_t> local(g.size(), std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < members.size(); ++i) local[members[i]] = i;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (const auto& nb : g.neighbors(members[i])) {
      const std::size_t j = local[nb.id];
      if (j != std::numeric_limits<std::size_t>::max() && j > i) {
        out.graph.set_edge(i, j, nb.distance);
      }
    }
  }
  return out;
}

/// Edge for every pair within range, weighted by the true distance.
inline WsnGraph build_unit_ball_graph(const Deployment& d, double range) {
  if (!(range > 0.0)) throw std::invalid_argument("sensing range must be positive");
  WsnGraph g(d.size(), range);
  for (NodeId v = 0; v < d.size(); ++v) {
    for (NodeId w = v + 1; w < d.size(); ++w) {
      const double dist = (d.positions[v] - d.positions[w]).norm();
      if (dist <= range && dist > 0.0) g.set_edge(v, w, dist);
    }
  }
  return g;
}

/// Smallest range whose unit-ball graph has average degree >= target.
inline double range_for_average_degree(const Deployment& d, double target_degree) {
  const std::size_t n = d.size();
  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (NodeId v = 0; v < n; ++v) {
    for (NodeId w = v + 1; w < n; ++w) dists.push_back((d.positions[v] - d.positions[w]).norm());
  }
  if (dists.empty()) throw std::invalid_argument("need at least two nodes");
  const auto needed = static_cast<std::size_t>(std::ceil(target_degree * n / 2.0));
  const std::size_t idx = std::min(dists.size(), std::max<std::size_t>(needed, 1)) - 1;
  std::nth_element(dists.begin(), dists.begin() + idx, dists.end());
  return dists[idx];
}

// ---------------------------------------------------------------------------
// Noise

/// Mean relative bias of a measured distance at sensing range R.
inline double range_bias(double range) { return 0.022 * std::log(1.0 + range) - 0.038; }

struct NoiseSpec {
  double err_mag = 0.0;
  double range = 0.0;
  double large_noise_prob = 0.05;
  double large_noise_max_pct = 10.0;
};

inline constexpr double kMinMeasuredDistance = 1e-6;

/// Small relative Gaussian noise on every edge plus occasional large noise of
/// up to large_noise_max_pct percent of the range. One draw per edge.
inline WsnGraph apply_noise(const WsnGraph& g, const NoiseSpec& spec, Rng& rng) {
  if (spec.err_mag < 0.0) throw std::invalid_argument("error magnitude must be >= 0");
  if (spec.large_noise_prob < 0.0 || spec.large_noise_prob > 1.0) {
    throw std::invalid_argument("large noise probability must be in [0, 1]");
  }
  const double mean = range_bias(spec.range);
  const double sigma = spec.err_mag / 100.0;
  std::normal_distribution<double> small(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  WsnGraph out(g.size(), g.range());
  g.for_each_edge([&](NodeId v, NodeId w, double d) {
    const double gain = sigma > 0.0 ? mean + sigma * small(rng) : mean;
    double large = 0.0;
    if (spec.large_noise_prob > 0.0 && unit(rng) < spec.large_noise_prob) {
      const double pct = unit(rng) * spec.large_noise_max_pct;
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      large = sign * pct / 100.0 * spec.range;
    }
    out.set_edge(v, w, std::max(d * (1.0 + gain) + large, kMinMeasuredDistance));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Deployment generators

inline Deployment gen_random_cube(std::size_t n, double side, Rng& rng) {
  if (n < 1) throw std::invalid_argument("need at least one node");
  std::uniform_real_distribution<double> u(0.0, side);
  Deployment d;
  d.side = side;
  d.positions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(rng), y = u(rng), z = u(rng);
    d.positions.emplace_back(x, y, z);
  }
  return d;
}

/// Uniform nodes in the side x side square on z = 0.
inline Deployment gen_random_square(std::size_t n, double side, Rng& rng) {
  if (n < 1) throw std::invalid_argument("need at least one node");
  std::uniform_real_distribution<double> u(0.0, side);
  Deployment d;
  d.side = side;
  d.positions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(rng), y = u(rng);
    d.positions.emplace_back(x, y, 0.0);
  }
  return d;
}

/// Axis counts (nx, ny, nz) with product k and the smallest max/min ratio.
inline std::array<int, 3> grid_factorization(int k) {
  if (k < 1) throw std::invalid_argument("cluster count must be >= 1");
  std::array<int, 3> best{k, 1, 1};
  double best_ratio = static_cast<double>(k);
  for (int a = 1; a <= k; ++a) {
    if (k % a) continue;
    for (int b = 1; b <= k / a; ++b) {
      if ((k / a) % b) continue;
      const int c = k / a / b;
      const double ratio =
          static_cast<double>(std::max({a, b, c})) / static_cast<double>(std::min({a, b, c}));
      std::array<int, 3> cand{a, b, c};
      std::sort(cand.rbegin(), cand.rend());
      if (ratio < best_ratio - 1e-12 || (std::abs(ratio - best_ratio) <= 1e-12 && cand > best)) {
        best_ratio = ratio;
        best = cand;
      }
    }
  }
  return best;
}

struct Box {
  Point3 lo, hi;
  bool contains(const Point3& p, double tol = 0.0) const {
    return (p.array() >= lo.array() - tol).all() && (p.array() <= hi.array() + tol).all();
  }
};

/// Plane n . x = offset with unit normal n.
struct Plane {
  Point3 normal;
  double offset;
  double signed_distance(const Point3& p) const { return normal.dot(p) - offset; }
};

namespace detail {

inline Point3 random_unit_vector(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    const double x = g(rng), y = g(rng), z = g(rng);
    Point3 v(x, y, z);
    const double len = v.norm();
    if (len > 1e-12) return v / len;
  }
}

inline std::array<Point3, 8> corners(const Box& b) {
  std::array<Point3, 8> out;
  for (int i = 0; i < 8; ++i) {
    out[i] = Point3(i & 1 ? b.hi.x() : b.lo.x(), i & 2 ? b.hi.y() : b.lo.y(),
                    i & 4 ? b.hi.z() : b.lo.z());
  }
  return out;
}

/// Samples m points uniformly on plane n Box by rejection within the bounding
/// rectangle of the box corners projected onto the plane. Returns nothing when
/// 100 consecutive proposals miss the box.
inline std::optional<std::vector<Point3>> sample_on_plane(const Plane& plane, const Box& box,
                                                          std::size_t m, Rng& rng) {
  const Point3 n = plane.normal;
  const Point3 helper = std::abs(n.x()) < 0.9 ? Point3::UnitX() : Point3::UnitY();
  const Point3 u = n.cross(helper).normalized();
  const Point3 v = n.cross(u);
  const Point3 origin = n * plane.offset;
  double umin = std::numeric_limits<double>::infinity(), umax = -umin;
  double vmin = umin, vmax = -umin;
  for (const auto& c : corners(box)) {
    const Point3 rel = c - origin;
    umin = std::min(umin, rel.dot(u));
    umax = std::max(umax, rel.dot(u));
    vmin = std::min(vmin, rel.dot(v));
    vmax = std::max(vmax, rel.dot(v));
  }
  std::uniform_real_distribution<double> du(umin, umax), dv(vmin, vmax);
  std::vector<Point3> out;
  out.reserve(m);
  int misses = 0;
  while (out.size() < m) {
    const double a = du(rng), b = dv(rng);
    const Point3 p = origin + a * u + b * v;
    if (box.contains(p)) {
      out.push_back(p);
      misses = 0;
    } else if (++misses >= 100) {
      return std::nullopt;
    }
  }
  return out;
}

inline Plane plane_through(const Point3& normal, const Point3& point) {
  return {normal, normal.dot(point)};
}

/// Whether the intersection line of two planes passes through the box.
inline bool planes_meet_in(const Plane& a, const Plane& b, const Box& box) {
  const Point3 dir = a.normal.cross(b.normal);
  if (dir.norm() < 1e-9) return false;
  Eigen::Matrix3d m;
  m.row(0) = a.normal;
  m.row(1) = b.normal;
  m.row(2) = dir;
  const Point3 base = m.colPivHouseholderQr().solve(Point3(a.offset, b.offset, 0.0));
  double t0 = -std::numeric_limits<double>::infinity(), t1 = -t0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dir[i]) < 1e-15) {
      if (base[i] < box.lo[i] || base[i] > box.hi[i]) return false;
      continue;
    }
    double lo = (box.lo[i] - base[i]) / dir[i], hi = (box.hi[i] - base[i]) / dir[i];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  return t0 <= t1;
}

}  // namespace detail

struct PlanarDeployment {
  Deployment deployment;
  std::vector<Plane> planes;
  std::vector<Box> boxes;  // one per cluster; the full cube for intersecting planes
};

/// k disjoint planar clusters, one random plane per sub-box of a near-cubic grid.
inline PlanarDeployment gen_planar_disjoint_detailed(int k, std::size_t m, double side, Rng& rng) {
  if (k < 1) throw std::invalid_argument("cluster count must be >= 1");
  if (m < 3) throw std::invalid_argument("need at least 3 nodes per cluster");
  const auto grid = grid_factorization(k);
  PlanarDeployment out;
  out.deployment.side = side;
  out.deployment.k = k;
  const Point3 cell(side / grid[0], side / grid[1], side / grid[2]);
  int label = 0;
  for (int ix = 0; ix < grid[0]; ++ix) {
    for (int iy = 0; iy < grid[1]; ++iy) {
      for (int iz = 0; iz < grid[2]; ++iz, ++label) {
        const Point3 lo(ix * cell.x(), iy * cell.y(), iz * cell.z());
        const Box box{lo, lo + cell};
        for (;;) {
          const Point3 n = detail::random_unit_vector(rng);
          double smin = std::numeric_limits<double>::infinity(), smax = -smin;
          for (const auto& c : detail::corners(box)) {
            smin = std::min(smin, n.dot(c));
            smax = std::max(smax, n.dot(c));
          }
          std::uniform_real_distribution<double> off(smin, smax);
          const Plane plane{n, off(rng)};
          auto pts = detail::sample_on_plane(plane, box, m, rng);
          if (!pts) continue;
          for (const auto& p : *pts) {
            out.deployment.positions.push_back(p);
            out.deployment.cluster_labels.push_back(label);
          }
          out.planes.push_back(plane);
          out.boxes.push_back(box);
          break;
        }
      }
    }
  }
  return out;
}

inline Deployment gen_planar_disjoint(int k, std::size_t m, double side, Rng& rng) {
  return gen_planar_disjoint_detailed(k, m, side, rng).deployment;
}

/// k random planes crossing the whole cube. Each plane passes through a point
/// drawn from the central half of the cube and is redrawn until it meets every
/// earlier plane inside the cube.
inline PlanarDeployment gen_planar_intersecting_detailed(int k, std::size_t m, double side,
                                                         Rng& rng) {
  if (k < 1) throw std::invalid_argument("cluster count must be >= 1");
  if (m < 3) throw std::invalid_argument("need at least 3 nodes per cluster");
  PlanarDeployment out;
  out.deployment.side = side;
  out.deployment.k = k;
  const Box cube{Point3::Zero(), Point3::Constant(side)};
  std::uniform_real_distribution<double> central(0.25 * side, 0.75 * side);
  for (int label = 0; label < k; ++label) {
    for (;;) {
      const Point3 n = detail::random_unit_vector(rng);
      const double x = central(rng), y = central(rng), z = central(rng);
      const Plane plane = detail::plane_through(n, Point3(x, y, z));
      const bool meets_all = std::all_of(out.planes.begin(), out.planes.end(), [&](const Plane& p) {
        return detail::planes_meet_in(p, plane, cube);
      });
      if (!meets_all) continue;
      auto pts = detail::sample_on_plane(plane, cube, m, rng);
      if (!pts) continue;
      for (const auto& p : *pts) {
        out.deployment.positions.push_back(p);
        out.deployment.cluster_labels.push_back(label);
      }
      out.planes.push_back(plane);
      out.boxes.push_back(cube);
      break;
    }
  }
  return out;
}

inline Deployment gen_planar_intersecting(int k, std::size_t m, double side, Rng& rng) {
  return gen_planar_intersecting_detailed(k, m, side, rng).deployment;
}

/// 1 - k^2 / n: close to 1 for few large clusters, negative for many small ones.
inline double planarity_factor(int k, std::size_t n) {
  if (n < 1) throw std::invalid_argument("node count must be >= 1");
  return 1.0 - static_cast<double>(k) * k / static_cast<double>(n);
}

}  // namespace wsnloc

#endif  // WSNLOC_NETWORK_HPP
