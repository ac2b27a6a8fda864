// wsnloc: generate deployments, extract clusters, localize graphs and run
// Monte-Carlo sweeps.

#include "wsnloc/wsnloc.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using namespace wsnloc;

struct CommonFlags {
  std::string deployment = "random";
  std::size_t nodes = 100;
  std::optional<int> clusters;
  std::optional<double> range;
  std::optional<double> degree;
  std::string error = "0";
  std::size_t trials = 0;
  std::uint64_t seed = 1;
  std::string algorithm;
  std::optional<double> robust_angle;
  std::optional<std::size_t> seed_cap;
  std::string out;
  double side = 100.0;
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int cmd_generate(const CommonFlags& f) {
  ExperimentConfig cfg;
  cfg.deployment = f.deployment;
  cfg.nodes = f.nodes;
  cfg.clusters = f.clusters;
  cfg.side = f.side;
  cfg.range = f.range;
  cfg.degree = f.degree;
  cfg.seed = f.seed;
  if (!cfg.range && !cfg.degree) throw ConfigError("--range or --degree is required");
  const double err = detail::parse_value<double>("error", f.error);
  const TrialNetwork net = make_trial_network(cfg, 0);
  GraphFile file;
  file.deployment = net.deployment;
  file.graph = measured_graph(net.truth_graph, err, cfg.seed, 0);
  std::ostringstream os;
  write_graph(os, file);
  write_text(f.out, os.str());
  std::cerr << "generated " << file.graph.size() << " nodes, " << file.graph.edge_count()
            << " edges, average degree " << file.graph.average_degree() << '\n';
  return 0;
}

int cmd_cluster(const std::string& in, const CommonFlags& f) {
  GraphFile file = read_graph_file(in);
  const double err = detail::parse_value<double>("error", f.error);
  const auto result = extract_clusters(file.graph, err, file.deployment.side);
  file.clusters = result.clusters;
  file.residual = result.residual;
  file.has_clusters = true;
  if (f.out.empty()) {
    std::ofstream app(in, std::ios::app);
    if (!app) throw std::runtime_error("cannot append to " + in);
    write_cluster_lines(app, file.clusters, file.residual);
  } else {
    std::ostringstream os;
    write_graph(os, file);
    write_text(f.out, os.str());
  }
  std::cerr << "found " << result.clusters.size() << " clusters, " << result.residual.size()
            << " residual nodes\n";
  return 0;
}

int cmd_localize(const std::string& in, const CommonFlags& f) {
  const GraphFile file = read_graph_file(in);
  const double err = detail::parse_value<double>("error", f.error);
  const Algorithm alg = parse_algorithm(f.algorithm.empty() ? "quad" : f.algorithm);
  const WsnGraph& g = file.graph;

  PointFormation3 formation;
  std::optional<std::size_t> n_clusters;
  switch (alg) {
    case Algorithm::Trilat2d:
      formation = lift(trilaterate(g, {err, f.robust_angle, f.seed_cap}));
      break;
    case Algorithm::Quad:
      formation = quadrilaterate(g, {err, volume_threshold(err), f.seed_cap});
      break;
    case Algorithm::Cbl: {
      if (!file.deployment.has_labels()) throw ConfigError("cbl needs node cluster labels");
      const CblOptions o{err, volume_threshold(err), f.robust_angle, f.seed_cap};
      formation = cbl(g, file.deployment.clusters(), o).formation;
      break;
    }
    case Algorithm::PcCbl: {
      std::vector<std::vector<NodeId>> clusters = file.clusters;
      if (!file.has_clusters) clusters = extract_clusters(g, err, file.deployment.side).clusters;
      n_clusters = clusters.size();
      const CblOptions o{err, volume_threshold(err), f.robust_angle, f.seed_cap};
      formation = cbl(g, clusters, o).formation;
      break;
    }
  }

  std::ostringstream os;
  os << "formation 1\n";
  os << "meta n=" << g.size() << " algorithm=" << to_string(alg) << " localized=" << formation.size()
     << '\n';
  for (NodeId v = 0; v < formation.node_count(); ++v) {
    if (!formation.positions[v]) continue;
    const auto& p = *formation.positions[v];
    os << "pos " << v << ' ' << format_real(p.x()) << ' ' << format_real(p.y()) << ' '
       << format_real(p.z()) << '\n';
  }
  write_text(f.out, os.str());

  std::cerr << "recall " << recall(formation, g.size()) << "%";
  if (!file.deployment.positions.empty()) {
    const auto report = evaluate(formation, file.deployment.positions);
    if (report.avg_offset) {
      std::cerr << ", avg offset " << *report.avg_offset << ", flips " << report.flips
                << (report.mirrored ? " (mirrored)" : "");
    }
  }
  if (n_clusters) std::cerr << ", clusters " << *n_clusters;
  std::cerr << '\n';
  return 0;
}

int cmd_experiment(const std::string& config_path, const CommonFlags& f, const CLI::App& sub) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = parse_config_file(config_path);
  auto given = [&](const char* name) { return sub.count(name) > 0; };
  if (given("--deployment")) cfg.deployment = f.deployment;
  if (given("--nodes")) cfg.nodes = f.nodes;
  if (given("--clusters")) cfg.clusters = f.clusters;
  if (given("--side")) cfg.side = f.side;
  if (given("--range")) cfg.range = f.range;
  if (given("--degree")) cfg.degree = f.degree;
  if (given("--error")) apply_setting(cfg, "error", f.error);
  if (given("--trials")) cfg.trials = f.trials;
  if (given("--seed")) cfg.seed = f.seed;
  if (given("--algorithm")) apply_setting(cfg, "algorithm", f.algorithm);
  if (given("--robust-angle")) cfg.robust_angle = f.robust_angle;
  if (given("--seed-cap")) cfg.seed_cap = f.seed_cap;
  if (given("--out")) cfg.out = f.out;
  if (cfg.out.empty() || cfg.out == "-") {
    run_experiment(cfg, std::cout);
  } else {
    run_experiment_to_file(cfg);
  }
  return 0;
}

void add_flags(CLI::App* app, CommonFlags& f, bool sweep) {
  app->add_option("--deployment", f.deployment, "random | square | I-k-m | D-k-m | D | I");
  app->add_option("--nodes", f.nodes, "Total nodes (random, square) or nodes per cluster (D, I)");
  app->add_option("--clusters", f.clusters, "Cluster count for a bare D or I deployment");
  app->add_option("--side", f.side, "Cube side");
  app->add_option("--range", f.range, "Sensing range R");
  app->add_option("--degree", f.degree, "Target average degree (chooses R per trial)");
  app->add_option("--error", f.error, sweep ? "Error magnitudes, comma separated" : "Error magnitude");
  app->add_option("--seed", f.seed, "RNG seed");
  app->add_option("--out", f.out, "Output path ('-' for stdout)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Range-based 3D sensor network localization"};
  app.require_subcommand(1);
  CommonFlags f;
  std::string in, config;

  auto* gen = app.add_subcommand("generate", "Generate a deployment and write its graph file");
  add_flags(gen, f, false);

  auto* clu = app.add_subcommand("cluster", "Extract coplanar clusters from a graph file");
  clu->add_option("--in", in, "Graph file")->required();
  clu->add_option("--error", f.error, "Error magnitude");
  clu->add_option("--out", f.out, "Write the full graph here instead of appending");

  auto* loc = app.add_subcommand("localize", "Localize a graph file");
  loc->add_option("--in", in, "Graph file")->required();
  loc->add_option("--algorithm", f.algorithm, "trilat2d | quad | cbl | pc-cbl");
  loc->add_option("--error", f.error, "Error magnitude");
  loc->add_option("--robust-angle", f.robust_angle, "Minimum anchor triangle angle (degrees)");
  loc->add_option("--seed-cap", f.seed_cap, "Maximum seed sets tried");
  loc->add_option("--out", f.out, "Formation output path ('-' for stdout)");

  auto* exp = app.add_subcommand("experiment", "Run a Monte-Carlo sweep and write CSV");
  exp->add_option("--config", config, "key=value config file");
  add_flags(exp, f, true);
  exp->add_option("--trials", f.trials, "Trials per error magnitude");
  exp->add_option("--algorithm", f.algorithm, "Algorithms, comma separated");
  exp->add_option("--robust-angle", f.robust_angle, "Minimum anchor triangle angle (degrees)");
  exp->add_option("--seed-cap", f.seed_cap, "Maximum seed sets tried");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_generate(f);
    if (*clu) return cmd_cluster(in, f);
    if (*loc) return cmd_localize(in, f);
    if (*exp) return cmd_experiment(config, f, *exp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
