#pragma once

#include <filesystem>

#include <json.hpp>

#include "pushsum/graph.hpp"

namespace pushsum {

// Ensemble file schema (JSON, 1-based node labels, self-loops implied):
//
//   {
//     "n": 3,
//     "graphs": [ [[1, 2], [2, 3]], {"edges": [[3, 1]]} ],
//     "probs": [0.5, 0.5]
//   }
//
// A graph is either a bare edge list or an object with an "edges" list.

/// Parses and validates; throws ConfigError carrying every failed check.
GraphEnsemble ensemble_from_json(const nlohmann::json& doc);
/// Parses without validating.
GraphEnsemble parse_ensemble(const nlohmann::json& doc);
nlohmann::json ensemble_to_json(const GraphEnsemble& e);
GraphEnsemble load_ensemble(const std::filesystem::path& path);

nlohmann::json report_to_json(const ValidationReport& report);

/// Reads a whole JSON file; throws IoError / ConfigError with the path in the message.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace pushsum
