#include "support.hpp"

#include <gtest/gtest.h>

#include <functional>

using namespace wsnloc;
using wsnloc::testing::plane_residual;

namespace {

struct Scene {
  std::vector<Point3> pts;
  std::vector<int> labels;
  std::vector<std::vector<NodeId>> clusters;
};

/// `m` points per plane; each plane is given by a point map from [0,10]^2.
Scene make_scene(const std::vector<std::function<Point3(double, double)>>& planes, std::size_t m,
                 std::uint64_t seed) {
  Scene s;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (std::size_t c = 0; c < planes.size(); ++c) {
    s.clusters.emplace_back();
    for (std::size_t i = 0; i < m; ++i) {
      const double a = u(rng), b = u(rng);
      s.clusters.back().push_back(s.pts.size());
      s.pts.push_back(planes[c](a, b));
      s.labels.push_back(static_cast<int>(c));
    }
  }
  return s;
}

Point3 floor_plane(double a, double b) { return {a, b, 0.0}; }
Point3 upper_plane(double a, double b) { return {a, b, 5.0}; }
Point3 wall_plane(double a, double b) { return {14.0, a, b}; }
Point3 slope_plane(double a, double b) { return {a, 13.0 + 0.3 * b, b}; }

std::vector<CoplanarCluster> local_clusters(const WsnGraph& g, const Scene& s) {
  return localize_clusters_2d(g, s.clusters, CblOptions{});
}

/// Keeps every intra-cluster edge and only the listed interplanar ones.
WsnGraph restricted_graph(const Scene& s, const std::vector<std::pair<NodeId, NodeId>>& cross) {
  WsnGraph g(s.pts.size());
  for (NodeId v = 0; v < s.pts.size(); ++v) {
    for (NodeId w = v + 1; w < s.pts.size(); ++w) {
      if (s.labels[v] == s.labels[w]) g.set_edge(v, w, (s.pts[v] - s.pts[w]).norm());
    }
  }
  for (auto [v, w] : cross) g.set_edge(v, w, (s.pts[v] - s.pts[w]).norm());
  return g;
}

}  // namespace

TEST(LocalizeClusters2d, Examples) {
  const auto s = make_scene({floor_plane, upper_plane}, 4, 1);
  const auto g = wsnloc::testing::complete_graph(s.pts);
  auto clusters = localize_clusters_2d(g, {{0, 1, 2, 3}, {4, 5}}, CblOptions{});
  ASSERT_EQ(clusters.size(), 2u);
  EXPECT_EQ(clusters[0].local.size(), 4u);
  EXPECT_TRUE(clusters[1].local.empty());
}

TEST(SelectSupport, Examples) {
  std::vector<SupportCandidate> tri{{0, Point2(0, 0), 1}, {1, Point2(4, 0), 1}, {2, Point2(0, 3), 1}};
  EXPECT_EQ(select_support_nodes(tri), (std::array<NodeId, 3>{0, 1, 2}));

  std::vector<SupportCandidate> line{{0, Point2(0, 0), 1}, {1, Point2(1, 0), 1}, {2, Point2(2, 0), 1}};
  EXPECT_FALSE(select_support_nodes(line));

  // Scores decide among robust triangles.
  std::vector<SupportCandidate> many;
  for (NodeId i = 0; i < 10; ++i) {
    const double ang = 2.0 * M_PI * static_cast<double>(i) / 10.0;
    const std::size_t score = i == 2 ? 5 : i == 5 ? 4 : i == 8 ? 3 : 0;
    many.push_back({i, Point2(std::cos(ang), std::sin(ang)), score});
  }
  EXPECT_EQ(select_support_nodes(many), (std::array<NodeId, 3>{2, 5, 8}));
  EXPECT_EQ(select_support_nodes(many, NodeId{0}), (std::array<NodeId, 3>{0, 2, 5}));
}

TEST(SelectSupport, PrefersRobustTriangles) {
  // The thin triangle has the best score but a robust one exists.
  std::vector<SupportCandidate> c{{0, Point2(0, 0), 9},
                                  {1, Point2(10, 0), 9},
                                  {2, Point2(5, 0.1), 9},
                                  {3, Point2(5, 8), 0}};
  const auto pick = select_support_nodes(c);
  ASSERT_TRUE(pick);
  EXPECT_NE(std::find(pick->begin(), pick->end(), 3u), pick->end());
}

TEST(Cbl, SingleClusterEmbeddedAtZ0) {
  const auto s = make_scene({wall_plane}, 12, 2);
  const auto g = wsnloc::testing::complete_graph(s.pts);
  const auto clusters = local_clusters(g, s);
  const auto r = cbl(g, clusters, CblOptions{});
  EXPECT_EQ(r.formation.size(), 12u);
  for (NodeId v = 0; v < 12; ++v) {
    ASSERT_TRUE(r.formation.positions[v]);
    EXPECT_EQ(*r.formation.positions[v], lift(*clusters[0].local.positions[v]));
  }
  const auto report = evaluate(r.formation, s.pts);
  EXPECT_LT(*report.avg_offset, 1e-6);
}

TEST(Cbl, SemiLocalizationMatchesTruthOrMirror) {
  const auto s = make_scene({floor_plane, upper_plane}, 10, 3);
  const auto g = wsnloc::testing::complete_graph(s.pts);
  const auto clusters = local_clusters(g, s);
  CblSession session(g, clusters, CblOptions{});
  ASSERT_TRUE(session.place_seed(0));
  ASSERT_TRUE(session.semi_localize(0, 1));
  EXPECT_EQ(session.state(1), ClusterState::SemiLocalized);
  const auto f = session.formation();
  EXPECT_EQ(f.size(), 20u);

  // Brute force both hypotheses: the estimate must match the truth, either
  // directly or after reflecting the target about the seed plane.
  const auto direct = evaluate(f, s.pts);
  auto mirrored_truth = s.pts;
  for (NodeId v : s.clusters[1]) mirrored_truth[v].z() = -mirrored_truth[v].z();
  const auto reflected = evaluate(f, mirrored_truth);
  EXPECT_LT(std::min(*direct.avg_offset, *reflected.avg_offset), 1e-6);
}

TEST(Cbl, SemiLocalizationNeedsInterplanarAnchors) {
  const auto s = make_scene({floor_plane, upper_plane}, 8, 4);
  const auto g = restricted_graph(s, {{0, 8}, {1, 9}});
  const auto clusters = local_clusters(g, s);
  CblSession session(g, clusters, CblOptions{});
  session.place_seed(0);
  EXPECT_FALSE(session.semi_localize(0, 1));
  EXPECT_EQ(session.state(1), ClusterState::Unlocalized);
}

TEST(Cbl, SemiLocalizationFailsBeyondMargin) {
  const auto s = make_scene({floor_plane, upper_plane}, 8, 5);
  WsnGraph g = wsnloc::testing::complete_graph(s.pts);
  // Stretch every interplanar distance far beyond what three spheres allow.
  for (NodeId v : s.clusters[0]) {
    for (NodeId w : s.clusters[1]) g.set_edge(v, w, 3.0 * (s.pts[v] - s.pts[w]).norm() + 40.0);
  }
  const auto clusters = local_clusters(g, s);
  CblSession session(g, clusters, CblOptions{});
  session.place_seed(0);
  EXPECT_FALSE(session.semi_localize(0, 1));
}

TEST(Cbl, RigidLocalizationOfThirdCluster) {
  const auto s = make_scene({floor_plane, wall_plane, slope_plane}, 10, 6);
  const auto g = wsnloc::testing::complete_graph(s.pts);
  const auto clusters = local_clusters(g, s);
  CblSession session(g, clusters, CblOptions{});
  session.place_seed(0);
  ASSERT_TRUE(session.semi_localize(0, 1));
  ASSERT_TRUE(session.rigid_localize(2));
  EXPECT_EQ(session.state(2), ClusterState::RigidLocalized);
  ASSERT_EQ(session.rigid_anchor_log().size(), 3u);
  for (const auto& q : session.rigid_anchor_log()) {
    const auto& gp = session.global();
    EXPECT_TRUE(is_non_coplanar(classify_points(*gp[q[0]], *gp[q[1]], *gp[q[2]], *gp[q[3]], 0.0)));
  }
  const auto report = evaluate(session.formation(), s.pts);
  EXPECT_LT(*report.avg_offset, 1e-6);
}

TEST(Cbl, RigidLocalizationRefusesSinglePlaneAnchors) {
  const auto s = make_scene({floor_plane, wall_plane, slope_plane}, 10, 7);
  std::vector<std::pair<NodeId, NodeId>> cross;
  for (NodeId v : s.clusters[0]) {
    for (NodeId w : s.clusters[1]) cross.emplace_back(v, w);
    for (NodeId w : s.clusters[2]) cross.emplace_back(v, w);
  }
  const auto g = restricted_graph(s, cross);
  const auto clusters = local_clusters(g, s);
  CblSession session(g, clusters, CblOptions{});
  session.place_seed(0);
  ASSERT_TRUE(session.semi_localize(0, 1));
  EXPECT_FALSE(session.rigid_localize(2));
  EXPECT_EQ(session.state(2), ClusterState::Unlocalized);
}

TEST(Cbl, NoisyRigidLocalizationSucceeds) {
  const auto s = make_scene({floor_plane, wall_plane, slope_plane}, 12, 8);
  const auto truth = wsnloc::testing::complete_graph(s.pts);
  Rng rng(8);
  const WsnGraph g = apply_noise(truth, NoiseSpec{0.5, 20.0, 0.0, 10.0}, rng);
  CblOptions o{0.5, volume_threshold(0.5), std::nullopt, std::nullopt};
  const auto r = cbl(g, s.clusters, o);
  EXPECT_GT(r.formation.size(), 0u);
  const auto report = evaluate(r.formation, s.pts);
  if (report.avg_offset) { EXPECT_TRUE(std::isfinite(*report.avg_offset)); }
}

TEST(Cbl, ThreeClustersFullyLocalized) {
  const auto s = make_scene({floor_plane, wall_plane, slope_plane}, 12, 9);
  const auto g = wsnloc::testing::complete_graph(s.pts);
  const auto clusters = local_clusters(g, s);
  const auto r = cbl(g, clusters, CblOptions{});
  EXPECT_EQ(r.formation.size(), s.pts.size());
  for (auto st : r.states) EXPECT_NE(st, ClusterState::Unlocalized);
  const auto report = evaluate(r.formation, s.pts);
  ASSERT_TRUE(report.avg_offset);
  EXPECT_LT(*report.avg_offset, 1e-6);

  for (const auto& members : s.clusters) {
    std::vector<Point3> placed;
    for (NodeId v : members) placed.push_back(*r.formation.positions[v]);
    EXPECT_LT(plane_residual(placed), 1e-6);
  }
}

TEST(Cbl, GlobalPositionsAreTransformedLocalPositions) {
  const auto s = make_scene({floor_plane, wall_plane, slope_plane}, 10, 10);
  const auto g = wsnloc::testing::complete_graph(s.pts);
  const auto clusters = local_clusters(g, s);
  CblSession session(g, clusters, CblOptions{});
  session.place_seed(0);
  ASSERT_TRUE(session.semi_localize(0, 1));
  session.cascade({0, 1});
  for (std::size_t c = 1; c < 3; ++c) {
    ASSERT_TRUE(session.transform(c));
    ASSERT_TRUE(session.support(c));
    for (NodeId v : clusters[c].members) {
      if (!clusters[c].local.positions[v]) continue;
      const Point3 mapped = apply_transform(*session.transform(c), lift(*clusters[c].local.positions[v]));
      EXPECT_LT((mapped - *session.global()[v]).norm(), 1e-9);
    }
  }
}

TEST(Cbl, NeverLocalizesNodesWithoutLocalPosition) {
  auto s = make_scene({floor_plane, wall_plane, slope_plane}, 10, 11);
  // A node far from its cluster, with edges to other clusters only.
  s.pts.push_back(Point3(40, 40, 0));
  s.labels.push_back(0);
  s.clusters[0].push_back(s.pts.size() - 1);
  WsnGraph g(s.pts.size());
  for (NodeId v = 0; v < s.pts.size(); ++v) {
    for (NodeId w = v + 1; w < s.pts.size(); ++w) {
      const bool lonely = v == s.pts.size() - 1 || w == s.pts.size() - 1;
      if (lonely && s.labels[v] == s.labels[w]) continue;
      g.set_edge(v, w, (s.pts[v] - s.pts[w]).norm());
    }
  }
  const auto clusters = local_clusters(g, s);
  EXPECT_FALSE(clusters[0].local.contains(s.pts.size() - 1));
  const auto r = cbl(g, clusters, CblOptions{});
  EXPECT_FALSE(r.formation.contains(s.pts.size() - 1));
  for (NodeId v = 0; v < s.pts.size(); ++v) {
    if (r.formation.contains(v)) { EXPECT_TRUE(clusters[s.labels[v]].local.contains(v)); }
  }
}

TEST(Cbl, EmptyWhenNoPairWorks) {
  const auto s = make_scene({floor_plane, upper_plane}, 8, 12);
  const auto g = restricted_graph(s, {});
  const auto r = cbl(g, s.clusters, CblOptions{});
  EXPECT_TRUE(r.formation.empty());
  EXPECT_FALSE(r.seed_cluster);
}

TEST(Cbl, RigidAnchorsNeverCoplanarOnPlanarDeployment) {
  Rng rng(13);
  const auto d = gen_planar_disjoint(8, 30, 100.0, rng);
  const auto g = build_unit_ball_graph(d, 40.0);
  const auto clusters = localize_clusters_2d(g, d.clusters(), CblOptions{});
  const auto r = cbl(g, clusters, CblOptions{});
  ASSERT_TRUE(r.seed_cluster && r.semi_cluster);
  CblSession session(g, clusters, CblOptions{});
  session.place_seed(*r.seed_cluster);
  ASSERT_TRUE(session.semi_localize(*r.seed_cluster, *r.semi_cluster));
  session.cascade({*r.seed_cluster, *r.semi_cluster});
  for (const auto& q : session.rigid_anchor_log()) {
    const auto& gp = session.global();
    EXPECT_TRUE(is_non_coplanar(classify_points(*gp[q[0]], *gp[q[1]], *gp[q[2]], *gp[q[3]], 0.0)));
  }
  EXPECT_EQ(session.formation().size(), r.formation.size());
  const auto report = evaluate(r.formation, d.positions);
  ASSERT_TRUE(report.avg_offset);
  EXPECT_LT(*report.avg_offset, 1e-6);
}
