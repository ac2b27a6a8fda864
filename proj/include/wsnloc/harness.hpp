#ifndef WSNLOC_HARNESS_HPP
#define WSNLOC_HARNESS_HPP

// Monte-Carlo driver: deployment -> unit-ball graph -> noise -> localizer ->
// metrics, one CSV row per (error magnitude, trial, algorithm).

#include "wsnloc/cbl.hpp"
#include "wsnloc/clustering.hpp"
#include "wsnloc/graph_io.hpp"
#include "wsnloc/localize2d.hpp"
#include "wsnloc/localize3d.hpp"
#include "wsnloc/metrics.hpp"
#include "wsnloc/network.hpp"

#include <chrono>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wsnloc {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Algorithm { Trilat2d, Quad, Cbl, PcCbl };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Trilat2d: return "trilat2d";
    case Algorithm::Quad: return "quad";
    case Algorithm::Cbl: return "cbl";
    case Algorithm::PcCbl: return "pc-cbl";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "trilat2d") return Algorithm::Trilat2d;
  if (s == "quad") return Algorithm::Quad;
  if (s == "cbl") return Algorithm::Cbl;
  if (s == "pc-cbl") return Algorithm::PcCbl;
  throw ConfigError("unknown algorithm '" + s + "' (trilat2d, quad, cbl, pc-cbl)");
}

enum class DeploymentKind { RandomCube, RandomSquare, PlanarDisjoint, PlanarIntersecting };

struct DeploymentSpec {
  DeploymentKind kind = DeploymentKind::RandomCube;
  int k = -1;
  std::size_t m = 0;  // nodes per cluster for planar kinds

  bool planar() const {
    return kind == DeploymentKind::PlanarDisjoint || kind == DeploymentKind::PlanarIntersecting;
  }
};

/// "random", "square", or "<I|D>-<k>-<m>".
inline DeploymentSpec parse_deployment(const std::string& name) {
  if (name == "random") return {DeploymentKind::RandomCube};
  if (name == "square") return {DeploymentKind::RandomSquare};
  if (name.size() >= 5 && (name[0] == 'I' || name[0] == 'D') && name[1] == '-') {
    const auto dash = name.find('-', 2);
    if (dash != std::string::npos) {
      try {
        std::size_t used_k = 0, used_m = 0;
        const std::string ks = name.substr(2, dash - 2), ms = name.substr(dash + 1);
        const int k = std::stoi(ks, &used_k);
        const long m = std::stol(ms, &used_m);
        if (used_k == ks.size() && used_m == ms.size() && k >= 1 && m >= 3) {
          return {name[0] == 'I' ? DeploymentKind::PlanarIntersecting
                                 : DeploymentKind::PlanarDisjoint,
                  k, static_cast<std::size_t>(m)};
        }
      } catch (const std::exception&) {
      }
    }
  }
  throw ConfigError("bad deployment name '" + name + "' (random, square, I-k-m, D-k-m)");
}

struct ExperimentConfig {
  std::string deployment = "random";
  std::size_t nodes = 100;  // total for random/square, per cluster for bare "D"/"I"
  std::optional<int> clusters;  // with deployment "D" or "I": builds D-<clusters>-<nodes>
  double side = 100.0;
  std::optional<double> range;
  /// Target average degree; the range is then chosen per trial.
  std::optional<double> degree;
  std::vector<double> errors{0.0};
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  std::vector<Algorithm> algorithms{Algorithm::Quad};
  std::optional<double> robust_angle;
  std::optional<std::size_t> seed_cap;
  std::string out;

  std::string deployment_name() const {
    if (deployment != "D" && deployment != "I") return deployment;
    if (!clusters) throw ConfigError("deployment '" + deployment + "' needs a cluster count");
    return deployment + "-" + std::to_string(*clusters) + "-" + std::to_string(nodes);
  }

  void validate() const {
    const auto spec = parse_deployment(deployment_name());
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (!range && !degree) throw ConfigError("either range or degree must be set");
    if (range && !(*range > 0.0)) throw ConfigError("range must be positive");
    if (!(side > 0.0)) throw ConfigError("side must be positive");
    if (errors.empty()) throw ConfigError("at least one error magnitude is required");
    for (double e : errors) {
      if (e < 0.0) throw ConfigError("error magnitudes must be >= 0");
    }
    if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
    for (auto a : algorithms) {
      if (a == Algorithm::Cbl && !spec.planar()) {
        throw ConfigError("cbl needs a planar deployment with cluster labels");
      }
    }
    if (!spec.planar() && nodes < 1) throw ConfigError("nodes must be >= 1");
  }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <typename T>
T parse_value(const std::string& key, const std::string& s) {
  std::istringstream is(s);
  T v{};
  if (!(is >> v) || !(is >> std::ws).eof()) throw ConfigError("bad value for " + key + ": '" + s + "'");
  return v;
}

}  // namespace detail

/// Applies one key=value setting. Keys mirror the CLI flags.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_value;
  if (key == "deployment") {
    cfg.deployment = value;
  } else if (key == "nodes") {
    cfg.nodes = parse_value<std::size_t>(key, value);
  } else if (key == "clusters") {
    cfg.clusters = parse_value<int>(key, value);
  } else if (key == "side") {
    cfg.side = parse_value<double>(key, value);
  } else if (key == "range") {
    cfg.range = parse_value<double>(key, value);
  } else if (key == "degree") {
    cfg.degree = parse_value<double>(key, value);
  } else if (key == "error") {
    cfg.errors.clear();
    for (const auto& e : detail::split_list(value)) cfg.errors.push_back(parse_value<double>(key, e));
  } else if (key == "trials") {
    cfg.trials = parse_value<std::size_t>(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_value<std::uint64_t>(key, value);
  } else if (key == "algorithm") {
    cfg.algorithms.clear();
    for (const auto& a : detail::split_list(value)) cfg.algorithms.push_back(parse_algorithm(a));
  } else if (key == "robust_angle") {
    cfg.robust_angle = parse_value<double>(key, value);
  } else if (key == "seed_cap") {
    cfg.seed_cap = parse_value<std::size_t>(key, value);
  } else if (key == "out") {
    cfg.out = value;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

/// Flat key=value text; '#' starts a comment.
inline ExperimentConfig parse_config(std::istream& is, ExperimentConfig cfg = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto f = s.find_first_not_of(" \t\r");
      const auto l = s.find_last_not_of(" \t\r");
      return f == std::string::npos ? std::string{} : s.substr(f, l - f + 1);
    };
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path, ExperimentConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, std::move(cfg));
}

/// SplitMix64 finalizer over (seed, trial, stream); later trials never shift
/// the random streams of earlier ones.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ trial) ^ stream);
}

inline Deployment generate_deployment(const DeploymentSpec& spec, std::size_t nodes, double side,
                                      Rng& rng) {
  switch (spec.kind) {
    case DeploymentKind::RandomCube: return gen_random_cube(nodes, side, rng);
    case DeploymentKind::RandomSquare: return gen_random_square(nodes, side, rng);
    case DeploymentKind::PlanarDisjoint: return gen_planar_disjoint(spec.k, spec.m, side, rng);
    case DeploymentKind::PlanarIntersecting:
      return gen_planar_intersecting(spec.k, spec.m, side, rng);
  }
  throw ConfigError("unhandled deployment kind");
}

/// Deployment and noiseless graph of one trial; independent of the error
/// magnitude so every error level sees the same network.
struct TrialNetwork {
  Deployment deployment;
  WsnGraph truth_graph;
};

inline TrialNetwork make_trial_network(const ExperimentConfig& cfg, std::size_t trial_index) {
  const auto spec = parse_deployment(cfg.deployment_name());
  Rng rng(derive_seed(cfg.seed, trial_index, 0));
  TrialNetwork t;
  t.deployment = generate_deployment(spec, cfg.nodes, cfg.side, rng);
  const double range =
      cfg.degree ? range_for_average_degree(t.deployment, *cfg.degree) : *cfg.range;
  t.truth_graph = build_unit_ball_graph(t.deployment, range);
  return t;
}

/// Zero error magnitude means exact distances; otherwise the empirical noise
/// model is applied.
inline WsnGraph measured_graph(const WsnGraph& truth, double err_mag, std::uint64_t seed,
                               std::size_t trial_index) {
  if (err_mag == 0.0) return truth;
  Rng rng(derive_seed(seed, trial_index, 1 + static_cast<std::uint64_t>(err_mag * 1000.0)));
  NoiseSpec spec;
  spec.err_mag = err_mag;
  spec.range = truth.range();
  return apply_noise(truth, spec, rng);
}

struct TrialRecord {
  std::string deployment;
  std::optional<double> mu;
  double range = 0.0;
  double err_mag = 0.0;
  std::size_t trial_index = 0;
  Algorithm algorithm = Algorithm::Quad;
  double recall_pct = 0.0;
  std::optional<double> avg_offset;
  std::size_t flips = 0;
  std::optional<std::size_t> n_clusters_found;
  double runtime_ms = 0.0;
};

struct AlgorithmRun {
  EvalReport report;
  std::optional<std::size_t> clusters_found;
};

inline AlgorithmRun run_algorithm(Algorithm alg, const ExperimentConfig& cfg,
                                  const Deployment& deployment, const WsnGraph& g, double err_mag) {
  AlgorithmRun run;
  switch (alg) {
    case Algorithm::Trilat2d: {
      TrilaterationOptions o{err_mag, cfg.robust_angle, cfg.seed_cap};
      run.report = evaluate(trilaterate(g, o), deployment.positions);
      break;
    }
    case Algorithm::Quad: {
      QuadrilaterationOptions o{err_mag, volume_threshold(err_mag), cfg.seed_cap};
      run.report = evaluate(quadrilaterate(g, o), deployment.positions);
      break;
    }
    case Algorithm::Cbl: {
      CblOptions o{err_mag, volume_threshold(err_mag), cfg.robust_angle, cfg.seed_cap};
      run.report = evaluate(cbl(g, deployment.clusters(), o).formation, deployment.positions);
      break;
    }
    case Algorithm::PcCbl: {
      // Only the measured graph reaches the clustering step.
      const auto found = extract_clusters(g, err_mag, cfg.side);
      CblOptions o{err_mag, volume_threshold(err_mag), cfg.robust_angle, cfg.seed_cap};
      run.report = evaluate(cbl(g, found.clusters, o).formation, deployment.positions);
      run.clusters_found = found.clusters.size();
      break;
    }
  }
  return run;
}

/// One record per configured algorithm, all on the same measured graph.
inline std::vector<TrialRecord> run_trial(const ExperimentConfig& cfg, double err_mag,
                                          std::size_t trial_index) {
  const auto spec = parse_deployment(cfg.deployment_name());
  const TrialNetwork net = make_trial_network(cfg, trial_index);
  const WsnGraph g = measured_graph(net.truth_graph, err_mag, cfg.seed, trial_index);
  std::vector<TrialRecord> out;
  for (Algorithm alg : cfg.algorithms) {
    TrialRecord r;
    r.deployment = cfg.deployment_name();
    if (spec.planar()) r.mu = planarity_factor(spec.k, spec.k * spec.m);
    r.range = g.range();
    r.err_mag = err_mag;
    r.trial_index = trial_index;
    r.algorithm = alg;
    const auto start = std::chrono::steady_clock::now();
    const AlgorithmRun run = run_algorithm(alg, cfg, net.deployment, g, err_mag);
    r.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    r.recall_pct = run.report.recall_pct;
    r.avg_offset = run.report.avg_offset;
    r.flips = run.report.flips;
    r.n_clusters_found = run.clusters_found;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kCsvHeader =
    "deployment,mu,R,err_mag,trial_index,algorithm,recall_pct,avg_offset,flips,n_clusters_found,"
    "runtime_ms";

namespace detail {
inline std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}
}  // namespace detail

inline std::string csv_row(const TrialRecord& r) {
  std::ostringstream os;
  os << r.deployment << ',' << (r.mu ? detail::fixed(*r.mu, 6) : "") << ','
     << format_real(r.range) << ',' << format_real(r.err_mag) << ',' << r.trial_index << ','
     << to_string(r.algorithm) << ',' << detail::fixed(r.recall_pct, 4) << ','
     << (r.avg_offset ? format_real(*r.avg_offset) : "") << ',' << r.flips << ','
     << (r.n_clusters_found ? std::to_string(*r.n_clusters_found) : "") << ','
     << detail::fixed(r.runtime_ms, 3);
  return os.str();
}

/// Mean row of one (error magnitude, algorithm) cell; offsets averaged over the
/// trials that produced one.
inline std::string csv_mean_row(const std::vector<TrialRecord>& cell) {
  const TrialRecord& first = cell.front();
  double recall = 0.0, offset = 0.0, flips = 0.0, clusters = 0.0, runtime = 0.0, range = 0.0;
  std::size_t with_offset = 0, with_clusters = 0;
  for (const auto& r : cell) {
    recall += r.recall_pct;
    flips += static_cast<double>(r.flips);
    runtime += r.runtime_ms;
    range += r.range;
    if (r.avg_offset) {
      offset += *r.avg_offset;
      ++with_offset;
    }
    if (r.n_clusters_found) {
      clusters += static_cast<double>(*r.n_clusters_found);
      ++with_clusters;
    }
  }
  const double n = static_cast<double>(cell.size());
  std::ostringstream os;
  os << first.deployment << ',' << (first.mu ? detail::fixed(*first.mu, 6) : "") << ','
     << format_real(range / n) << ',' << format_real(first.err_mag) << ",mean,"
     << to_string(first.algorithm) << ',' << detail::fixed(recall / n, 4) << ','
     << (with_offset ? format_real(offset / static_cast<double>(with_offset)) : "") << ','
     << detail::fixed(flips / n, 4) << ','
     << (with_clusters ? detail::fixed(clusters / static_cast<double>(with_clusters), 4) : "")
     << ',' << detail::fixed(runtime / n, 3);
  return os.str();
}

/// Streams the whole sweep. Rows are flushed as they are produced so an
/// interrupted run leaves a valid prefix.
inline std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg, std::ostream& csv) {
  cfg.validate();
  csv << kCsvHeader << '\n' << std::flush;
  std::vector<TrialRecord> all;
  for (double err : cfg.errors) {
    std::map<Algorithm, std::vector<TrialRecord>> cells;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      for (auto& r : run_trial(cfg, err, t)) {
        csv << csv_row(r) << '\n' << std::flush;
        if (!csv) throw std::runtime_error("CSV write failed");
        cells[r.algorithm].push_back(r);
        all.push_back(std::move(r));
      }
    }
    for (Algorithm alg : cfg.algorithms) csv << csv_mean_row(cells[alg]) << '\n' << std::flush;
  }
  return all;
}

inline std::vector<TrialRecord> run_experiment_to_file(const ExperimentConfig& cfg) {
  if (cfg.out.empty()) throw ConfigError("no output path configured");
  std::ofstream out(cfg.out);
  if (!out) throw std::runtime_error("cannot write " + cfg.out);
  return run_experiment(cfg, out);
}

}  // namespace wsnloc

#endif  // WSNLOC_HARNESS_HPP
