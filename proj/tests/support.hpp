#ifndef WSNLOC_TESTS_SUPPORT_HPP
#define WSNLOC_TESTS_SUPPORT_HPP

#include "wsnloc/wsnloc.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace wsnloc::testing {

inline Point3 random_point(Rng& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  const double x = u(rng), y = u(rng), z = u(rng);
  return {x, y, z};
}

inline double coordinate_volume(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
  Eigen::Matrix3d m;
  m.col(0) = b - a;
  m.col(1) = c - a;
  m.col(2) = d - a;
  return std::abs(m.determinant()) / 6.0;
}

inline Deployment deployment_of(std::vector<Point3> pts, std::vector<int> labels = {}) {
  Deployment d;
  d.positions = std::move(pts);
  d.cluster_labels = std::move(labels);
  if (!d.cluster_labels.empty()) {
    int k = 0;
    for (int l : d.cluster_labels) k = std::max(k, l + 1);
    d.k = k;
  }
  return d;
}

/// Exact-distance graph with an edge for every listed pair.
inline WsnGraph graph_with_edges(const std::vector<Point3>& pts,
                                 const std::vector<std::pair<NodeId, NodeId>>& edges) {
  WsnGraph g(pts.size(), 0.0);
  for (auto [v, w] : edges) g.set_edge(v, w, (pts[v] - pts[w]).norm());
  return g;
}

inline WsnGraph complete_graph(const std::vector<Point3>& pts) {
  WsnGraph g(pts.size(), 0.0);
  for (NodeId v = 0; v < pts.size(); ++v) {
    for (NodeId w = v + 1; w < pts.size(); ++w) g.set_edge(v, w, (pts[v] - pts[w]).norm());
  }
  return g;
}

inline Eigen::Matrix3d rotation_about(const Point3& axis, double radians) {
  return Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix();
}

/// Largest distance of any point to the best-fit plane of a point set.
inline double plane_residual(const std::vector<Point3>& pts) {
  Point3 c = Point3::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Point3 n = es.eigenvectors().col(0);
  double worst = 0.0;
  for (const auto& p : pts) worst = std::max(worst, std::abs(n.dot(p - c)));
  return worst;
}

}  // namespace wsnloc::testing

#endif
