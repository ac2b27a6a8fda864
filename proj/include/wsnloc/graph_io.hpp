#ifndef WSNLOC_GRAPH_IO_HPP
#define WSNLOC_GRAPH_IO_HPP

// Plain-text graph interchange:
//
//   wsn 1
//   meta n=<int> R=<real> side=<real> k=<int|-1>
//   node <id> <x> <y> <z> <cluster|-1>
//   edge <id1> <id2> <measured_distance>
//   cluster <cluster_id> <node_id>...      (cluster -1 lists the residual)
//
// Reals are written with 9 significant digits. Blank lines and text after '#'
// are ignored on input.

#include "wsnloc/network.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wsnloc {

class GraphFormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct GraphFile {
  WsnGraph graph;
  Deployment deployment;  // positions empty unless every node line is present
  std::vector<std::vector<NodeId>> clusters;
  std::vector<NodeId> residual;
  bool has_clusters = false;
};

inline std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline void write_cluster_lines(std::ostream& os, const std::vector<std::vector<NodeId>>& clusters,
                                const std::vector<NodeId>& residual) {
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    os << "cluster " << c;
    for (NodeId v : clusters[c]) os << ' ' << v;
    os << '\n';
  }
  os << "cluster -1";
  for (NodeId v : residual) os << ' ' << v;
  os << '\n';
}

inline void write_graph(std::ostream& os, const GraphFile& f) {
  const auto& d = f.deployment;
  os << "wsn 1\n";
  os << "meta n=" << f.graph.size() << " R=" << format_real(f.graph.range())
     << " side=" << format_real(d.side) << " k=" << d.k << '\n';
  for (NodeId v = 0; v < d.positions.size(); ++v) {
    const auto& p = d.positions[v];
    os << "node " << v << ' ' << format_real(p.x()) << ' ' << format_real(p.y()) << ' '
       << format_real(p.z()) << ' ' << (d.has_labels() ? d.cluster_labels[v] : -1) << '\n';
  }
  f.graph.for_each_edge([&](NodeId v, NodeId w, double dist) {
    os << "edge " << v << ' ' << w << ' ' << format_real(dist) << '\n';
  });
  if (f.has_clusters) write_cluster_lines(os, f.clusters, f.residual);
}

namespace detail {

[[noreturn]] inline void format_error(std::size_t line, const std::string& what) {
  throw GraphFormatError("line " + std::to_string(line) + ": " + what);
}

inline std::string meta_value(const std::string& token, const std::string& key, std::size_t line) {
  if (token.rfind(key + "=", 0) != 0) format_error(line, "expected " + key + "=<value>");
  return token.substr(key.size() + 1);
}

template <typename T>
T parse_number(const std::string& s, std::size_t line) {
  std::istringstream is(s);
  T value{};
  if (!(is >> value) || !is.eof()) format_error(line, "bad number '" + s + "'");
  return value;
}

}  // namespace detail

inline GraphFile read_graph(std::istream& is) {
  GraphFile f;
  std::string raw;
  std::size_t line_no = 0;
  bool have_version = false, have_meta = false;
  std::size_t n = 0;
  std::vector<char> node_seen;
  std::vector<Point3> positions;
  std::vector<int> labels;

  while (std::getline(is, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string tag;
    if (!(ls >> tag)) continue;
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);

    if (!have_version) {
      if (tag != "wsn" || tok.size() != 1) detail::format_error(line_no, "expected 'wsn <version>'");
      if (tok[0] != "1") detail::format_error(line_no, "unsupported format version " + tok[0]);
      have_version = true;
      continue;
    }
    if (!have_meta) {
      if (tag != "meta" || tok.size() != 4) detail::format_error(line_no, "expected meta line");
      n = detail::parse_number<std::size_t>(detail::meta_value(tok[0], "n", line_no), line_no);
      const double range =
          detail::parse_number<double>(detail::meta_value(tok[1], "R", line_no), line_no);
      f.deployment.side =
          detail::parse_number<double>(detail::meta_value(tok[2], "side", line_no), line_no);
      f.deployment.k = detail::parse_number<int>(detail::meta_value(tok[3], "k", line_no), line_no);
      f.graph = WsnGraph(n, range);
      node_seen.assign(n, 0);
      positions.assign(n, Point3::Zero());
      labels.assign(n, -1);
      have_meta = true;
      continue;
    }
    if (tag == "node") {
      if (tok.size() != 5) detail::format_error(line_no, "node needs id x y z cluster");
      const auto id = detail::parse_number<std::size_t>(tok[0], line_no);
      if (id >= n) detail::format_error(line_no, "node id out of range");
      if (node_seen[id]) detail::format_error(line_no, "duplicate node " + tok[0]);
      node_seen[id] = 1;
      positions[id] = Point3(detail::parse_number<double>(tok[1], line_no),
                             detail::parse_number<double>(tok[2], line_no),
                             detail::parse_number<double>(tok[3], line_no));
      labels[id] = detail::parse_number<int>(tok[4], line_no);
      if (f.deployment.k >= 0 && labels[id] >= f.deployment.k) {
        detail::format_error(line_no, "cluster label exceeds k");
      }
    } else if (tag == "edge") {
      if (tok.size() != 3) detail::format_error(line_no, "edge needs id1 id2 distance");
      const auto v = detail::parse_number<std::size_t>(tok[0], line_no);
      const auto w = detail::parse_number<std::size_t>(tok[1], line_no);
      const double d = detail::parse_number<double>(tok[2], line_no);
      try {
        f.graph.set_edge(v, w, d);
      } catch (const std::exception& e) {
        detail::format_error(line_no, e.what());
      }
    } else if (tag == "cluster") {
      if (tok.empty()) detail::format_error(line_no, "cluster needs an id");
      const int cid = detail::parse_number<int>(tok[0], line_no);
      std::vector<NodeId> members;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const auto v = detail::parse_number<std::size_t>(tok[i], line_no);
        if (v >= n) detail::format_error(line_no, "cluster member out of range");
        members.push_back(v);
      }
      f.has_clusters = true;
      if (cid < 0) {
        f.residual = std::move(members);
      } else {
        if (static_cast<std::size_t>(cid) >= f.clusters.size()) f.clusters.resize(cid + 1);
        f.clusters[cid] = std::move(members);
      }
    } else {
      detail::format_error(line_no, "unknown record '" + tag + "'");
    }
  }
  if (!have_version) detail::format_error(line_no, "missing 'wsn' header");
  if (!have_meta) detail::format_error(line_no, "missing meta line");

  bool all_nodes = n > 0;
  bool any_label = false;
  for (std::size_t v = 0; v < n; ++v) {
    all_nodes = all_nodes && node_seen[v];
    any_label = any_label || labels[v] >= 0;
  }
  if (all_nodes) {
    f.deployment.positions = std::move(positions);
    if (any_label) f.deployment.cluster_labels = std::move(labels);
  }
  return f;
}

inline GraphFile read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return read_graph(in);
  } catch (const GraphFormatError& e) {
    throw GraphFormatError(path + ": " + e.what());
  }
}

inline void write_graph_file(const std::string& path, const GraphFile& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_graph(out, f);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace wsnloc

#endif  // WSNLOC_GRAPH_IO_HPP
