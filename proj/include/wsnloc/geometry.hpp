#ifndef WSNLOC_GEOMETRY_HPP
#define WSNLOC_GEOMETRY_HPP

// Coordinate-free and coordinate-based kernels shared by every localizer:
// Cayley-Menger volume tests, seed placement, single-node lateration,
// two-candidate disambiguation and the local-to-global cluster transform.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace wsnloc {

using Point2 = Eigen::Vector2d;
using Point3 = Eigen::Vector3d;

class GeometryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Absolute slack applied to every distance check, so exact inputs survive
/// floating-point rounding even when the error magnitude is zero.
inline constexpr double kAbsoluteMargin = 1e-9;

/// Triangles whose smallest angle is below this (degrees) count as collinear.
inline constexpr double kCollinearAngleDeg = 1e-6;

/// Default minimum angle (degrees) of a robust anchor triangle.
inline constexpr double kDefaultRobustAngleDeg = 20.0;

/// Relative tolerance on the Cayley-Menger determinant, scaled by the cube of
/// the largest squared edge. Determinants inside it are treated as zero.
inline constexpr double kCayleyMengerRelTol = 1e-12;

inline Point3 lift(const Point2& p) { return {p.x(), p.y(), 0.0}; }

// ---------------------------------------------------------------------------
// Tetrahedra from six distances

struct TetraDistances {
  double ab{}, ac{}, ad{}, bc{}, bd{}, cd{};

  static TetraDistances from_points(const Point3& a, const Point3& b, const Point3& c,
                                    const Point3& d) {
    return {(a - b).norm(), (a - c).norm(), (a - d).norm(),
            (b - c).norm(), (b - d).norm(), (c - d).norm()};
  }

  double max_edge() const { return std::max({ab, ac, ad, bc, bd, cd}); }
};

struct Coplanar {};
struct NonCoplanar {
  double volume;
};
struct Incomplete {};

using TetraClass = std::variant<Coplanar, NonCoplanar, Incomplete>;

inline bool is_coplanar(const TetraClass& c) { return std::holds_alternative<Coplanar>(c); }
inline bool is_non_coplanar(const TetraClass& c) {
  return std::holds_alternative<NonCoplanar>(c);
}

/// Determinant of the 5x5 bordered Cayley-Menger matrix. Equals 288 V^2 for a
/// realizable tetrahedron and is negative when the distances admit none.
inline double cayley_menger_det(const TetraDistances& d) {
  const double ab = d.ab * d.ab, ac = d.ac * d.ac, ad = d.ad * d.ad;
  const double bc = d.bc * d.bc, bd = d.bd * d.bd, cd = d.cd * d.cd;
  Eigen::Matrix<double, 5, 5> m;
  // clang-format off
  m <<  0, ab, ac, ad, 1,
       ab,  0, bc, bd, 1,
       ac, bc,  0, cd, 1,
       ad, bd, cd,  0, 1,
        1,  1,  1,  1, 0;
  // clang-format on
  return m.determinant();
}

inline TetraClass classify_tetra(const TetraDistances& d, double kappa) {
  const double det = cayley_menger_det(d);
  const double e2 = d.max_edge() * d.max_edge();
  const double tol = kCayleyMengerRelTol * e2 * e2 * e2;
  if (det < -tol) return Incomplete{};
  const double volume = det <= tol ? 0.0 : std::sqrt(det / 288.0);
  if (volume <= kappa) return Coplanar{};
  return NonCoplanar{volume};
}

inline TetraClass classify_points(const Point3& a, const Point3& b, const Point3& c,
                                  const Point3& d, double kappa) {
  return classify_tetra(TetraDistances::from_points(a, b, c, d), kappa);
}

// ---------------------------------------------------------------------------
// Triangle quality

namespace detail {
inline double angle_between(const Point3& u, const Point3& v) {
  const double cross = u.cross(v).norm();
  return std::atan2(cross, u.dot(v));
}
}  // namespace detail

/// Smallest interior angle of triangle abc, in degrees. Coincident points give 0.
inline double min_triangle_angle(const Point3& a, const Point3& b, const Point3& c) {
  const Point3 ab = b - a, ac = c - a, bc = c - b;
  if (ab.norm() == 0.0 || ac.norm() == 0.0 || bc.norm() == 0.0) return 0.0;
  const double at_a = detail::angle_between(ab, ac);
  const double at_b = detail::angle_between(-ab, bc);
  const double at_c = std::numbers::pi - at_a - at_b;
  const double smallest = std::max(0.0, std::min({at_a, at_b, at_c}));
  return std::min(60.0, smallest * 180.0 / std::numbers::pi);
}

inline double min_triangle_angle(const Point2& a, const Point2& b, const Point2& c) {
  return min_triangle_angle(lift(a), lift(b), lift(c));
}

// ---------------------------------------------------------------------------
// Seed placement

struct SeedTriangle {
  Point2 a, b, c;
};

/// a at the origin, b on the positive x axis, c above the x axis.
inline SeedTriangle place_seed_triangle(double r_ab, double r_ac, double r_bc) {
  if (!(r_ab > 0.0) || !(r_ac > 0.0) || !(r_bc > 0.0)) {
    throw GeometryError("seed triangle needs positive distances");
  }
  const double ab2 = r_ab * r_ab, ac2 = r_ac * r_ac, bc2 = r_bc * r_bc;
  const double k = ab2 - bc2 + ac2;
  double disc = 4.0 * ab2 * ac2 - k * k;
  if (disc < 0.0) {
    if (disc < -1e-9 * 4.0 * ab2 * ac2) {
      throw GeometryError("impossible triangle: distances violate the triangle inequality");
    }
    disc = 0.0;
  }
  const double x = k / (2.0 * r_ab);
  const double y = std::sqrt(disc) / (2.0 * r_ab);
  return {Point2(0.0, 0.0), Point2(r_ab, 0.0), Point2(x, y)};
}

struct SeedTetra {
  Point3 a, b, c, d;
};

/// Base triangle on z = 0 as above, apex on the non-negative z side.
inline SeedTetra place_seed_tetra(const TetraDistances& d) {
  const SeedTriangle base = place_seed_triangle(d.ab, d.ac, d.bc);
  const double x = base.c.x(), y = base.c.y();
  if (y <= 0.0 || min_triangle_angle(base.a, base.b, base.c) < kCollinearAngleDeg) {
    throw GeometryError("degenerate seed base: a, b, c are collinear");
  }
  const double ad2 = d.ad * d.ad, bd2 = d.bd * d.bd, cd2 = d.cd * d.cd;
  const double xp = (ad2 - bd2 + d.ab * d.ab) / (2.0 * d.ab);
  const double yp = (ad2 - cd2 - xp * xp + (xp - x) * (xp - x) + y * y) / (2.0 * y);
  double z2 = ad2 - xp * xp - yp * yp;
  if (z2 < 0.0) {
    if (z2 < -1e-9) throw GeometryError("inconsistent seed distances: no real apex height");
    z2 = 0.0;
  }
  return {lift(base.a), lift(base.b), lift(base.c), Point3(xp, yp, std::sqrt(z2))};
}

// ---------------------------------------------------------------------------
// Disambiguation

/// Tolerance on a measured distance r at error magnitude err_mag (a percentage).
inline double distance_margin(double r, double err_mag) {
  return std::max(r * err_mag / 100.0, kAbsoluteMargin);
}

/// Picks the candidate consistent with the distance r to anchor. Returns
/// nothing when both or neither candidate fit within the margin.
template <typename P>
std::optional<P> resolve_ambiguity(const P& p1, const P& p2, const P& anchor, double r,
                                   double err_mag) {
  const double m = distance_margin(r, err_mag);
  const bool fits1 = std::abs((p1 - anchor).norm() - r) <= m;
  const bool fits2 = std::abs((p2 - anchor).norm() - r) <= m;
  if (fits1 && fits2) return std::nullopt;
  if (fits1) return p1;
  if (fits2) return p2;
  return std::nullopt;
}

template <typename P>
struct RangedAnchor {
  P position;
  double distance;
};

using Anchor2 = RangedAnchor<Point2>;
using Anchor3 = RangedAnchor<Point3>;

/// Tolerated negative slack on a squared height: the radius would have to grow
/// by the distance margin before the circles (spheres) meet.
inline double height_slack(double r, double err_mag) {
  const double m = distance_margin(r, err_mag);
  return 2.0 * r * m + m * m;
}

/// Both intersections of circles around anchors 0 and 1.
inline std::optional<std::pair<Point2, Point2>> intersect_circles(const Anchor2& c1,
                                                                   const Anchor2& c2,
                                                                   double err_mag) {
  const Point2 delta = c2.position - c1.position;
  const double dist = delta.norm();
  if (dist == 0.0) return std::nullopt;
  const double r1 = c1.distance, r2 = c2.distance;
  const double x = (r1 * r1 - r2 * r2 + dist * dist) / (2.0 * dist);
  double h2 = r1 * r1 - x * x;
  if (h2 < 0.0) {
    if (h2 < -height_slack(std::max(r1, r2), err_mag)) return std::nullopt;
    h2 = 0.0;
  }
  const double h = std::sqrt(h2);
  const Point2 ex = delta / dist;
  const Point2 ey(-ex.y(), ex.x());
  const Point2 foot = c1.position + x * ex;
  return std::make_pair(Point2(foot + h * ey), Point2(foot - h * ey));
}

inline std::optional<Point2> trilaterate_point_2d(const std::array<Anchor2, 3>& anchors,
                                                  double err_mag) {
  if (min_triangle_angle(anchors[0].position, anchors[1].position, anchors[2].position) <
      kCollinearAngleDeg) {
    return std::nullopt;
  }
  const auto candidates = intersect_circles(anchors[0], anchors[1], err_mag);
  if (!candidates) return std::nullopt;
  return resolve_ambiguity(candidates->first, candidates->second, anchors[2].position,
                           anchors[2].distance, err_mag);
}

/// Both intersections of the spheres around three anchors, mirror images
/// through the anchors' plane. The first has the positive normal component
/// with respect to (p1 - p0) x (p2 - p0).
inline std::optional<std::pair<Point3, Point3>> intersect_spheres(const Anchor3& s0,
                                                                   const Anchor3& s1,
                                                                   const Anchor3& s2,
                                                                   double err_mag) {
  const Point3 d01 = s1.position - s0.position;
  const double d = d01.norm();
  if (d == 0.0) return std::nullopt;
  const Point3 ex = d01 / d;
  const Point3 d02 = s2.position - s0.position;
  const double i = ex.dot(d02);
  Point3 ey = d02 - i * ex;
  const double j = ey.norm();
  if (j == 0.0) return std::nullopt;
  ey /= j;
  const Point3 ez = ex.cross(ey);
  const double r0 = s0.distance, r1 = s1.distance, r2 = s2.distance;
  const double x = (r0 * r0 - r1 * r1 + d * d) / (2.0 * d);
  const double y = (r0 * r0 - r2 * r2 + i * i + j * j) / (2.0 * j) - (i / j) * x;
  double z2 = r0 * r0 - x * x - y * y;
  if (z2 < 0.0) {
    if (z2 < -height_slack(std::max({r0, r1, r2}), err_mag)) return std::nullopt;
    z2 = 0.0;
  }
  const double z = std::sqrt(z2);
  const Point3 foot = s0.position + x * ex + y * ey;
  return std::make_pair(Point3(foot + z * ez), Point3(foot - z * ez));
}

/// Three-sphere intersection resolved by the fourth anchor.
inline std::optional<Point3> quadrilaterate_point_3d(const std::array<Anchor3, 4>& anchors,
                                                     double err_mag) {
  if (min_triangle_angle(anchors[0].position, anchors[1].position, anchors[2].position) <
      kCollinearAngleDeg) {
    return std::nullopt;
  }
  const auto candidates = intersect_spheres(anchors[0], anchors[1], anchors[2], err_mag);
  if (!candidates) return std::nullopt;
  return resolve_ambiguity(candidates->first, candidates->second, anchors[3].position,
                           anchors[3].distance, err_mag);
}

// ---------------------------------------------------------------------------
// Local (z = 0) to global cluster transform

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Point3 local_origin = Point3::Zero();
  Point3 global_origin = Point3::Zero();
};

namespace detail {
/// Columns x, y, z built from the centroid frame of a point triple; x points at
/// the first point, z is normal to the triple, y = x cross z.
inline Eigen::Matrix3d triple_frame(const std::array<Point3, 3>& p, const Point3& centroid) {
  const Point3 to_a = p[0] - centroid;
  const Point3 to_b = p[1] - centroid;
  if (to_a.norm() == 0.0 || to_b.norm() == 0.0) {
    throw GeometryError("collinear support triple: point coincides with centroid");
  }
  const Point3 x = to_a.normalized();
  const Point3 v = to_b.normalized();
  const Point3 n = x.cross(v);
  const double n_norm = n.norm();
  if (n_norm < 1e-12) throw GeometryError("collinear support triple: no plane normal");
  const Point3 z = n / n_norm;
  const Point3 y = x.cross(z);
  Eigen::Matrix3d m;
  m.col(0) = x;
  m.col(1) = y;
  m.col(2) = z;
  return m;
}
}  // namespace detail

inline RigidTransform build_transform(const std::array<Point3, 3>& local,
                                      const std::array<Point3, 3>& global) {
  RigidTransform t;
  t.local_origin = (local[0] + local[1] + local[2]) / 3.0;
  t.global_origin = (global[0] + global[1] + global[2]) / 3.0;
  const Eigen::Matrix3d m_input = detail::triple_frame(local, t.local_origin);
  const Eigen::Matrix3d m_output = detail::triple_frame(global, t.global_origin);
  t.rotation = m_output * m_input.transpose();
  const double det = t.rotation.determinant();
  if (std::abs(det - 1.0) > 1e-9) {
    throw GeometryError("cluster transform is not a proper rotation (det = " +
                        std::to_string(det) + ")");
  }
  return t;
}

inline Point3 apply_transform(const RigidTransform& t, const Point3& p) {
  return t.rotation * (p - t.local_origin) + t.global_origin;
}

}  // namespace wsnloc

#endif  // WSNLOC_GEOMETRY_HPP
