#ifndef WSNLOC_METRICS_HPP
#define WSNLOC_METRICS_HPP

#include "wsnloc/formation.hpp"
#include "wsnloc/geometry.hpp"
#include "wsnloc/network.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <optional>
#include <vector>

namespace wsnloc {

template <typename P>
double recall(const PointFormation<P>& f, std::size_t n) {
  return n == 0 ? 0.0 : 100.0 * static_cast<double>(f.size()) / static_cast<double>(n);
}

/// Maps an estimated frame onto the true frame: p -> rotation * p + translation.
/// `rotation` may be an improper orthogonal matrix when mirrored is set.
struct Alignment {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Point3 translation = Point3::Zero();
  bool mirrored = false;
  double rms = 0.0;

  Point3 apply(const Point3& p) const { return rotation * p + translation; }
};

namespace detail {

struct Correspondence {
  std::vector<Point3> est, truth;
};

template <typename P>
Correspondence common_points(const PointFormation<P>& est, const std::vector<Point3>& truth) {
  Correspondence c;
  for (NodeId v = 0; v < est.node_count() && v < truth.size(); ++v) {
    if (!est.positions[v]) continue;
    if constexpr (P::RowsAtCompileTime == 2) {
      c.est.push_back(lift(*est.positions[v]));
    } else {
      c.est.push_back(*est.positions[v]);
    }
    c.truth.push_back(truth[v]);
  }
  return c;
}

inline bool spans_plane(const std::vector<Point3>& pts) {
  if (pts.size() < 3) return false;
  Point3 mean = Point3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double scale = 0.0;
  for (const auto& p : pts) {
    cov += (p - mean) * (p - mean).transpose();
    scale = std::max(scale, (p - mean).squaredNorm());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  // Second largest spread must be non-negligible for a unique fit.
  return scale > 0.0 && es.eigenvalues()(1) > 1e-12 * scale;
}

inline Alignment kabsch(const Correspondence& c, bool allow_reflection_only) {
  const double n = static_cast<double>(c.est.size());
  Point3 me = Point3::Zero(), mt = Point3::Zero();
  for (std::size_t i = 0; i < c.est.size(); ++i) {
    me += c.est[i];
    mt += c.truth[i];
  }
  me /= n;
  mt /= n;
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < c.est.size(); ++i) h += (c.est[i] - me) * (c.truth[i] - mt).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d u = svd.matrixU(), v = svd.matrixV();
  const double natural = (v * u.transpose()).determinant() > 0.0 ? 1.0 : -1.0;
  const double wanted = allow_reflection_only ? -1.0 : 1.0;
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = natural * wanted;
  Alignment a;
  a.rotation = v * d * u.transpose();
  a.translation = mt - a.rotation * me;
  a.mirrored = allow_reflection_only;
  double sq = 0.0;
  for (std::size_t i = 0; i < c.est.size(); ++i) sq += (a.apply(c.est[i]) - c.truth[i]).squaredNorm();
  a.rms = std::sqrt(sq / n);
  return a;
}

}  // namespace detail

/// Least-squares rigid alignment of the estimate onto the truth over the
/// localized nodes, once as a proper motion and once with a reflection; the
/// better fit wins, ties going to the proper motion. Needs three common nodes
/// that are not collinear.
template <typename P>
std::optional<Alignment> align(const PointFormation<P>& est, const std::vector<Point3>& truth) {
  const auto c = detail::common_points(est, truth);
  if (!detail::spans_plane(c.est) || !detail::spans_plane(c.truth)) return std::nullopt;
  const Alignment proper = detail::kabsch(c, false);
  const Alignment mirror = detail::kabsch(c, true);
  const double slack = 1e-12 * (1.0 + proper.rms);
  return mirror.rms < proper.rms - slack ? mirror : proper;
}

/// Mean distance between the aligned estimates and the truth.
template <typename P>
double avg_offset(const PointFormation<P>& est, const std::vector<Point3>& truth,
                  const Alignment& a) {
  double total = 0.0;
  std::size_t count = 0;
  for (NodeId v = 0; v < est.node_count() && v < truth.size(); ++v) {
    if (!est.positions[v]) continue;
    Point3 p;
    if constexpr (P::RowsAtCompileTime == 2) {
      p = lift(*est.positions[v]);
    } else {
      p = *est.positions[v];
    }
    total += (a.apply(p) - truth[v]).norm();
    ++count;
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

namespace detail {

inline constexpr double kBoundaryEps = 1e-9;

inline int sign_of(double x) { return x > kBoundaryEps ? 1 : (x < -kBoundaryEps ? -1 : 0); }

/// Side of p relative to each region boundary defined by the anchors: the
/// three lines through anchor pairs (three anchors, within their plane) or the
/// four planes through anchor triples (four anchors).
inline std::vector<int> region_signature(const std::vector<Point3>& anchors, const Point3& p) {
  std::vector<int> sig;
  if (anchors.size() == 3) {
    const Point3 n = (anchors[1] - anchors[0]).cross(anchors[2] - anchors[0]);
    if (n.norm() == 0.0) return sig;
    const Point3 nu = n.normalized();
    for (int i = 0; i < 3; ++i) {
      const Point3& a = anchors[i];
      const Point3& b = anchors[(i + 1) % 3];
      const Point3 dir = (b - a).normalized();
      sig.push_back(sign_of(nu.dot(dir.cross(p - a))));
    }
  } else if (anchors.size() == 4) {
    static constexpr int kTriples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    for (const auto& t : kTriples) {
      const Point3 n = (anchors[t[1]] - anchors[t[0]]).cross(anchors[t[2]] - anchors[t[0]]);
      if (n.norm() == 0.0) {
        sig.push_back(0);
        continue;
      }
      sig.push_back(sign_of(n.normalized().dot(p - anchors[t[0]])));
    }
  }
  return sig;
}

}  // namespace detail

/// Number of localized nodes whose aligned estimate falls in a different
/// topological region than the true position, relative to the true positions
/// of the anchors that localized them. Boundary signs never count.
template <typename P>
std::size_t flip_count(const PointFormation<P>& est, const std::vector<Point3>& truth,
                       const Alignment& a) {
  std::size_t flips = 0;
  for (NodeId v = 0; v < est.node_count() && v < truth.size(); ++v) {
    if (!est.positions[v] || est.anchors[v].empty()) continue;
    std::vector<Point3> anchors;
    for (NodeId id : est.anchors[v]) anchors.push_back(truth[id]);
    Point3 p;
    if constexpr (P::RowsAtCompileTime == 2) {
      p = lift(*est.positions[v]);
    } else {
      p = *est.positions[v];
    }
    const auto s_est = detail::region_signature(anchors, a.apply(p));
    const auto s_true = detail::region_signature(anchors, truth[v]);
    for (std::size_t i = 0; i < s_est.size(); ++i) {
      if (s_est[i] != 0 && s_true[i] != 0 && s_est[i] != s_true[i]) {
        ++flips;
        break;
      }
    }
  }
  return flips;
}

struct EvalReport {
  double recall_pct = 0.0;
  std::optional<double> avg_offset;
  std::size_t flips = 0;
  bool aligned = false;
  bool mirrored = false;
};

template <typename P>
EvalReport evaluate(const PointFormation<P>& est, const std::vector<Point3>& truth) {
  EvalReport r;
  r.recall_pct = recall(est, truth.size());
  if (const auto a = align(est, truth)) {
    r.aligned = true;
    r.mirrored = a->mirrored;
    r.avg_offset = avg_offset(est, truth, *a);
    r.flips = flip_count(est, truth, *a);
  }
  return r;
}

}  // namespace wsnloc

#endif  // WSNLOC_METRICS_HPP
