#ifndef WSNLOC_FORMATION_HPP
#define WSNLOC_FORMATION_HPP

#include "wsnloc/geometry.hpp"
#include "wsnloc/network.hpp"

#include <optional>
#include <vector>

namespace wsnloc {

/// Partial assignment of coordinates to node ids. `anchors[v]` lists the nodes
/// that localized v (empty for seeds and for nodes placed by a transform).
template <typename P>
struct PointFormation {
  std::vector<std::optional<P>> positions;
  std::vector<std::vector<NodeId>> anchors;
  std::vector<NodeId> seed_ids;
  std::size_t localized = 0;

  PointFormation() = default;
  explicit PointFormation(std::size_t n) : positions(n), anchors(n) {}

  std::size_t node_count() const { return positions.size(); }
  std::size_t size() const { return localized; }
  bool empty() const { return localized == 0; }
  bool contains(NodeId v) const { return v < positions.size() && positions[v].has_value(); }

  void assign(NodeId v, const P& p, std::vector<NodeId> by = {}) {
    if (!positions[v]) ++localized;
    positions[v] = p;
    anchors[v] = std::move(by);
  }
};

using PointFormation2 = PointFormation<Point2>;
using PointFormation3 = PointFormation<Point3>;

/// Embeds a planar formation at z = 0.
inline PointFormation3 lift(const PointFormation2& f) {
  PointFormation3 out(f.node_count());
  for (NodeId v = 0; v < f.node_count(); ++v) {
    if (f.positions[v]) out.assign(v, lift(*f.positions[v]), f.anchors[v]);
  }
  out.seed_ids = f.seed_ids;
  return out;
}

}  // namespace wsnloc

#endif  // WSNLOC_FORMATION_HPP
