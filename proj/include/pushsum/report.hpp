#pragma once

#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pushsum/harness.hpp"

namespace pushsum {

inline constexpr const char* kMetricsHeader = "trial,t,graph_id,gap_max,gap_mean,consensus_error,min_y,bound,ratio";

/// Shortest decimal string that parses back to the same double ("inf", "-inf", "nan" otherwise).
std::string format_double(double v);
double parse_double(const std::string& s);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

/// Columns t, graph_id, min_y, consensus_error, then z columns when requested
/// (z<i> for d = 1, z<i>_<k> otherwise; 1-based).
void write_trace_csv(std::ostream& out, const std::vector<RoundTrace<double>>& trace, bool z_columns);

nlohmann::json constants_to_json(const BoundConstants& c);
nlohmann::json fit_to_json(const RateFit& f);
nlohmann::json summary_json(const ExperimentResult& result);

enum class Format { csv, json };
std::set<Format> parse_formats(const std::string& list);

/// Writes metrics.csv and/or summary.json (and trace_<trial>.csv when enabled) into `dir`.
/// Returns the paths written. IoError names the failing path.
std::vector<std::filesystem::path> emit(const ExperimentResult& result, const std::filesystem::path& dir,
                                        const std::set<Format>& formats);

}  // namespace pushsum
