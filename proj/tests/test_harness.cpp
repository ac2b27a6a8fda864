#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace wsnloc;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(line);
  while (std::getline(is, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("wsnloc_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(WSNLOC_CLI_PATH) + " " + args;
  return std::system(cmd.c_str());
}

}  // namespace

TEST(Deployment, NameGrammar) {
  auto s = parse_deployment("D-8-100");
  EXPECT_EQ(s.kind, DeploymentKind::PlanarDisjoint);
  EXPECT_EQ(s.k, 8);
  EXPECT_EQ(s.m, 100u);
  s = parse_deployment("I-4-200");
  EXPECT_EQ(s.kind, DeploymentKind::PlanarIntersecting);
  EXPECT_EQ(parse_deployment("random").kind, DeploymentKind::RandomCube);
  EXPECT_EQ(parse_deployment("square").kind, DeploymentKind::RandomSquare);
  for (const char* bad : {"X-8-100", "D-8", "D-0-10", "D-8-2", "D-8-1x", "D--8-10", ""}) {
    EXPECT_THROW(parse_deployment(bad), ConfigError) << bad;
  }
}

TEST(Config, ParsesKeyValueText) {
  std::istringstream in(
      "# sweep\n"
      "deployment = D-8-50\n"
      "range=40\n"
      "error = 1, 10 ,20\n"
      "trials = 3\n"
      "seed = 99\n"
      "algorithm = quad,cbl , pc-cbl\n"
      "robust_angle = 25\n"
      "seed_cap = 100   # tractable\n"
      "\n");
  const auto cfg = parse_config(in);
  EXPECT_EQ(cfg.deployment, "D-8-50");
  EXPECT_EQ(*cfg.range, 40.0);
  EXPECT_EQ(cfg.errors, (std::vector<double>{1, 10, 20}));
  EXPECT_EQ(cfg.trials, 3u);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.algorithms,
            (std::vector<Algorithm>{Algorithm::Quad, Algorithm::Cbl, Algorithm::PcCbl}));
  EXPECT_EQ(*cfg.robust_angle, 25.0);
  EXPECT_EQ(*cfg.seed_cap, 100u);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, ClusterShorthand) {
  ExperimentConfig cfg;
  cfg.deployment = "D";
  cfg.nodes = 50;
  cfg.range = 40.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  apply_setting(cfg, "clusters", "8");
  EXPECT_EQ(cfg.deployment_name(), "D-8-50");
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, Errors) {
  std::istringstream unknown("colour = blue\n");
  EXPECT_THROW(parse_config(unknown), ConfigError);
  std::istringstream no_eq("trials 3\n");
  EXPECT_THROW(parse_config(no_eq), ConfigError);
  std::istringstream bad_num("trials = many\n");
  EXPECT_THROW(parse_config(bad_num), ConfigError);
  std::istringstream bad_alg("algorithm = magic\n");
  EXPECT_THROW(parse_config(bad_alg), ConfigError);

  ExperimentConfig cfg;
  EXPECT_THROW(cfg.validate(), ConfigError);  // no range or degree
  cfg.range = 40.0;
  cfg.trials = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.trials = 1;
  cfg.algorithms = {Algorithm::Cbl};
  EXPECT_THROW(cfg.validate(), ConfigError);  // labels need a planar deployment
  cfg.errors = {-1.0};
  cfg.algorithms = {Algorithm::Quad};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, SampleFilesParse) {
  for (const char* name : {"cbl_vs_quad.conf", "pc_cbl.conf"}) {
    const auto cfg = parse_config_file(std::string(WSNLOC_SAMPLES_DIR) + "/" + name);
    EXPECT_NO_THROW(cfg.validate()) << name;
  }
  EXPECT_THROW(parse_config_file("/nonexistent/file.conf"), ConfigError);
}

TEST(Seeds, TrialStreamsAreIndependent) {
  EXPECT_EQ(derive_seed(1, 2, 0), derive_seed(1, 2, 0));
  EXPECT_NE(derive_seed(1, 2, 0), derive_seed(1, 3, 0));
  EXPECT_NE(derive_seed(1, 2, 0), derive_seed(1, 2, 1));
  EXPECT_NE(derive_seed(1, 2, 0), derive_seed(2, 2, 0));

  ExperimentConfig cfg;
  cfg.deployment = "random";
  cfg.nodes = 30;
  cfg.range = 40.0;
  cfg.trials = 2;
  const auto early = make_trial_network(cfg, 1);
  cfg.trials = 10;
  const auto later = make_trial_network(cfg, 1);
  EXPECT_EQ(early.deployment.positions, later.deployment.positions);
  EXPECT_TRUE(early.truth_graph == later.truth_graph);
}

TEST(Seeds, ZeroErrorMeansExactDistances) {
  ExperimentConfig cfg;
  cfg.nodes = 30;
  cfg.range = 40.0;
  const auto net = make_trial_network(cfg, 0);
  EXPECT_TRUE(measured_graph(net.truth_graph, 0.0, cfg.seed, 0) == net.truth_graph);
  EXPECT_FALSE(measured_graph(net.truth_graph, 1.0, cfg.seed, 0) == net.truth_graph);
}

TEST(GraphIo, RoundTripsPlanarDeployment) {
  Rng rng(5);
  GraphFile f;
  f.deployment = gen_planar_disjoint(8, 50, 100.0, rng);
  f.graph = build_unit_ball_graph(f.deployment, 40.0);
  NoiseSpec spec{5.0, 40.0};
  f.graph = apply_noise(f.graph, spec, rng);
  const auto clusters = extract_clusters(f.graph, 5.0);
  f.clusters = clusters.clusters;
  f.residual = clusters.residual;
  f.has_clusters = true;

  std::stringstream ss;
  write_graph(ss, f);
  const GraphFile back = read_graph(ss);
  EXPECT_EQ(back.graph.size(), f.graph.size());
  EXPECT_EQ(back.graph.edge_count(), f.graph.edge_count());
  f.graph.for_each_edge([&](NodeId v, NodeId w, double d) {
    ASSERT_TRUE(back.graph.distance(v, w));
    EXPECT_NEAR(*back.graph.distance(v, w), d, 1e-8 * d);
  });
  EXPECT_EQ(back.deployment.cluster_labels, f.deployment.cluster_labels);
  EXPECT_EQ(back.deployment.k, 8);
  EXPECT_NEAR(back.graph.range(), 40.0, 1e-12);
  EXPECT_EQ(back.clusters, f.clusters);
  EXPECT_EQ(back.residual, f.residual);

  // Writing what was read reproduces the same bytes.
  std::stringstream again;
  write_graph(again, back);
  EXPECT_EQ(again.str(), ss.str());
}

TEST(GraphIo, Rejections) {
  auto parse = [](const std::string& text) {
    std::istringstream is(text);
    return read_graph(is);
  };
  EXPECT_THROW(parse("wsn 2\nmeta n=1 R=1 side=1 k=-1\n"), GraphFormatError);
  EXPECT_THROW(parse("wsn 1\nnode 0 0 0 0 -1\n"), GraphFormatError);
  EXPECT_THROW(parse("wsn 1\n"), GraphFormatError);
  EXPECT_THROW(parse(""), GraphFormatError);
  EXPECT_THROW(parse("wsn 1\nmeta n=2 R=1 side=1 k=-1\nedge 0 0 1\n"), GraphFormatError);
  EXPECT_THROW(parse("wsn 1\nmeta n=2 R=1 side=1 k=-1\nedge 0 1 -3\n"), GraphFormatError);
  EXPECT_THROW(parse("wsn 1\nmeta n=2 R=1 side=1 k=-1\nbogus 1\n"), GraphFormatError);
  EXPECT_THROW(parse("wsn 1\nmeta n=2 R=1 side=1 k=1\nnode 0 0 0 0 3\n"), GraphFormatError);
  try {
    parse("wsn 1\nmeta n=2 R=1 side=1 k=-1\n\nedge 0 1 x\n");
    FAIL() << "expected an error";
  } catch (const GraphFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(GraphIo, CommentsAndMissingNodes) {
  std::istringstream is(
      "# header comment\nwsn 1\nmeta n=3 R=5 side=10 k=-1\nedge 0 1 2.5  # trailing\nedge 1 2 1\n");
  const auto f = read_graph(is);
  EXPECT_EQ(f.graph.edge_count(), 2u);
  EXPECT_TRUE(f.deployment.positions.empty());
  EXPECT_FALSE(f.has_clusters);
}

TEST(Experiment, RowCountsAndMeans) {
  ExperimentConfig cfg;
  cfg.deployment = "square";
  cfg.nodes = 25;
  cfg.degree = 10.0;
  cfg.errors = {1.0, 10.0, 20.0};
  cfg.trials = 3;
  cfg.algorithms = {Algorithm::Trilat2d, Algorithm::Quad};
  cfg.seed_cap = 50;
  std::ostringstream csv;
  const auto records = run_experiment(cfg, csv);
  const auto lines = lines_of(csv.str());
  ASSERT_FALSE(lines.empty());
  EXPECT_EQ(lines[0], kCsvHeader);
  std::size_t data = 0, mean = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = fields(lines[i]);
    ASSERT_EQ(f.size(), 11u) << lines[i];
    (f[4] == "mean" ? mean : data) += 1;
  }
  EXPECT_EQ(data, 18u);  // 3 trials x 3 errors x 2 algorithms
  EXPECT_EQ(mean, 6u);
  EXPECT_EQ(records.size(), 18u);

  // Each mean row averages the recall of its own cell.
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = fields(lines[i]);
    if (f[4] != "mean") continue;
    double sum = 0.0;
    int n = 0;
    for (const auto& r : records) {
      if (to_string(r.algorithm) == f[5] && format_real(r.err_mag) == f[3]) {
        sum += r.recall_pct;
        ++n;
      }
    }
    ASSERT_EQ(n, 3);
    EXPECT_NEAR(std::stod(f[6]), sum / n, 1e-4);
  }
}

TEST(Experiment, MuColumnForPlanarDeployments) {
  ExperimentConfig cfg;
  cfg.deployment = "D-8-10";
  cfg.range = 40.0;
  cfg.trials = 1;
  cfg.algorithms = {Algorithm::PcCbl};
  const auto records = run_trial(cfg, 0.0, 0);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_DOUBLE_EQ(*records[0].mu, planarity_factor(8, 80));
  EXPECT_TRUE(records[0].n_clusters_found);
}

TEST(Experiment, UnlocalizableTrialHasBlankOffset) {
  ExperimentConfig cfg;
  cfg.deployment = "square";
  cfg.nodes = 20;
  cfg.range = 40.0;
  cfg.trials = 1;
  cfg.algorithms = {Algorithm::Quad};
  const auto r = run_trial(cfg, 0.0, 0).front();
  EXPECT_EQ(r.recall_pct, 0.0);
  EXPECT_FALSE(r.avg_offset);
  const auto f = fields(csv_row(r));
  EXPECT_EQ(f[7], "");
}

TEST(Cli, GenerateClusterLocalizeExperiment) {
  const fs::path dir = scratch_dir("cli");
  const std::string graph = (dir / "g.wsn").string();
  ASSERT_EQ(run("generate --deployment D --clusters 4 --nodes 20 --range 45 --error 1 --seed 3 --out " +
                graph + " 2>/dev/null"),
            0);
  auto file = read_graph_file(graph);
  EXPECT_EQ(file.graph.size(), 80u);
  EXPECT_EQ(file.deployment.k, 4);
  EXPECT_FALSE(file.has_clusters);

  ASSERT_EQ(run("cluster --in " + graph + " --error 1 2>/dev/null"), 0);
  file = read_graph_file(graph);
  EXPECT_TRUE(file.has_clusters);

  const std::string formation = (dir / "f.txt").string();
  ASSERT_EQ(run("localize --in " + graph + " --algorithm pc-cbl --error 1 --out " + formation +
                " 2>/dev/null"),
            0);
  const auto lines = lines_of(read_file(formation));
  ASSERT_GE(lines.size(), 2u);
  EXPECT_EQ(lines[0], "formation 1");

  const std::string csv = (dir / "out.csv").string();
  ASSERT_EQ(run("experiment --config " + std::string(WSNLOC_SAMPLES_DIR) +
                "/pc_cbl.conf --trials 1 --out " + csv),
            0);
  const auto rows = lines_of(read_file(csv));
  ASSERT_EQ(rows.size(), 3u);  // header, one trial, one mean
  EXPECT_EQ(rows[0], kCsvHeader);

  EXPECT_NE(run("localize --in " + (dir / "missing.wsn").string() + " 2>/dev/null"), 0);
  EXPECT_NE(run("experiment --deployment nonsense --range 10 2>/dev/null >/dev/null"), 0);
  fs::remove_all(dir);
}
