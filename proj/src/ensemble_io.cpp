#include "pushsum/ensemble_io.hpp"

#include <fstream>

#include "pushsum/errors.hpp"

namespace pushsum {

using nlohmann::json;

namespace {

DiGraph parse_graph(Index n, const json& node) {
  const json& list = node.is_object() ? node.at("edges") : node;
  if (!list.is_array()) throw ConfigError("graph must be an edge list");
  std::vector<DiGraph::Edge> edges;
  for (const auto& e : list) {
    if (!e.is_array() || e.size() != 2) throw ConfigError("edge must be a pair [from, to]");
    const auto from = e[0].get<Index>();
    const auto to = e[1].get<Index>();
    if (from < 1 || from > n || to < 1 || to > n)
      throw ConfigError("edge [" + std::to_string(from) + ", " + std::to_string(to) + "] outside [1, " +
                        std::to_string(n) + "]");
    edges.emplace_back(from - 1, to - 1);
  }
  return DiGraph::with_self_loops(n, edges);
}

}  // namespace

GraphEnsemble parse_ensemble(const json& doc) {
  try {
    const auto n = doc.at("n").get<Index>();
    if (n < 1) throw ConfigError("ensemble n must be positive");
    std::vector<DiGraph> graphs;
    for (const auto& g : doc.at("graphs")) graphs.push_back(parse_graph(n, g));
    auto probs = doc.at("probs").get<std::vector<double>>();
    return GraphEnsemble(std::move(graphs), std::move(probs));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed ensemble: ") + e.what());
  }
}

GraphEnsemble ensemble_from_json(const json& doc) {
  auto e = parse_ensemble(doc);
  const auto report = validate_ensemble(e);
  if (!report.ok()) {
    std::string msg = "invalid ensemble:";
    for (const auto& f : report.failures()) msg += " [" + f + "]";
    throw ConfigError(msg);
  }
  return e;
}

json ensemble_to_json(const GraphEnsemble& e) {
  json graphs = json::array();
  for (const auto& g : e.graphs()) {
    json edges = json::array();
    for (const auto& [from, to] : g.edges())
      if (from != to) edges.push_back({from + 1, to + 1});
    graphs.push_back(std::move(edges));
  }
  return {{"n", e.node_count()}, {"graphs", std::move(graphs)}, {"probs", e.probs()}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

GraphEnsemble load_ensemble(const std::filesystem::path& path) {
  try {
    return ensemble_from_json(read_json_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json report_to_json(const ValidationReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    json entry = {{"check", c.name}, {"passed", c.passed}};
    if (!c.passed) entry["detail"] = c.detail;
    checks.push_back(std::move(entry));
  }
  return {{"ok", report.ok()}, {"checks", std::move(checks)}};
}

}  // namespace pushsum
