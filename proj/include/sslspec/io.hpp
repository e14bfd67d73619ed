#ifndef SSLSPEC_IO_HPP
#define SSLSPEC_IO_HPP

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "graph.hpp"
#include "json.hpp"
#include "optim.hpp"

namespace sslspec {

using json = nlohmann::json;

// {"n": N, "edges": [[i, j, w], ...]} with i < j.
inline json graph_to_json(const RelationGraph& g) {
  json j;
  j["n"] = g.n();
  json edges = json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.i, e.j, e.w});
  j["edges"] = std::move(edges);
  return j;
}

inline RelationGraph graph_from_json(const json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("edges"))
    throw std::invalid_argument("graph json: expected keys \"n\" and \"edges\"");
  const Index n = j.at("n").get<Index>();
  if (n < 0) throw std::invalid_argument("graph json: negative node count");
  std::vector<Edge> edges;
  for (const json& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 3) throw std::invalid_argument("graph json: edge must be [i, j, w]");
    Edge ed{e[0].get<Index>(), e[1].get<Index>(), e[2].get<double>()};
    if (ed.i == ed.j) throw std::invalid_argument("graph json: diagonal entry");
    if (ed.i > ed.j) throw std::invalid_argument("graph json: edges must satisfy i < j");
    if (!(ed.w >= 0.0)) throw std::invalid_argument("graph json: negative weight");
    edges.push_back(ed);
  }
  return RelationGraph::from_edges(n, edges);
}

inline void save_graph(const RelationGraph& g, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << graph_to_json(g).dump(1) << "\n";
}

inline RelationGraph load_graph(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return graph_from_json(json::parse(f));
}

// Shortest round-trip decimal form; "nan"/"inf" spelled out.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& t, Index k) {
  os << "step,loss,gap_sq";
  for (Index i = 1; i <= k; ++i) os << ",sv_" << i;
  os << "\n";
  for (const TrajectoryPoint& p : t.steps) {
    os << p.step << "," << format_number(p.loss) << "," << format_number(p.gap_sq);
    for (Index i = 0; i < k; ++i)
      os << "," << (i < p.singular_values.size() ? format_number(p.singular_values(i)) : std::string("nan"));
    os << "\n";
  }
}

}  // namespace sslspec

#endif  // SSLSPEC_IO_HPP
