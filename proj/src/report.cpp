#include "pushsum/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pushsum/errors.hpp"

namespace pushsum {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::optional<double> opt_field(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    out << (r.trial ? std::to_string(*r.trial) : std::string("mean")) << ',' << r.t << ','
        << (r.graph_id ? std::to_string(*r.graph_id + 1) : std::string{}) << ',' << opt(r.gap_max) << ','
        << opt(r.gap_mean) << ',' << format_double(r.consensus_error) << ',' << format_double(r.min_y) << ','
        << (r.bound ? format_double(r.bound->value()) : std::string{}) << ',' << opt(r.ratio) << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw ConfigError("metrics CSV header mismatch");
  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 9) throw ConfigError("metrics CSV line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    try {
      MetricsRow r;
      if (f[0] != "mean") r.trial = std::stoull(f[0]);
      r.t = std::stoull(f[1]);
      if (!f[2].empty()) r.graph_id = std::stoull(f[2]) - 1;
      r.gap_max = opt_field(f[3]);
      r.gap_mean = opt_field(f[4]);
      r.consensus_error = parse_double(f[5]);
      r.min_y = parse_double(f[6]);
      if (auto b = opt_field(f[7])) r.bound = LogValue{*b > 0.0 ? std::log(*b) : -std::numeric_limits<double>::infinity()};
      r.ratio = opt_field(f[8]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw ConfigError("metrics CSV line " + std::to_string(lineno) + " is malformed");
    }
  }
  return rows;
}

void write_trace_csv(std::ostream& out, const std::vector<RoundTrace<double>>& trace, bool z_columns) {
  out << "t,graph_id,min_y,consensus_error";
  const Index n = trace.empty() ? 0 : trace.front().state.size();
  const Index d = trace.empty() ? 0 : trace.front().state.dim();
  if (z_columns) {
    for (Index i = 0; i < n; ++i)
      for (Index k = 0; k < d; ++k) out << ",z" << i + 1 << (d == 1 ? std::string{} : "_" + std::to_string(k + 1));
  }
  out << '\n';
  for (const auto& row : trace) {
    out << row.t << ',' << (row.graph_id ? std::to_string(*row.graph_id + 1) : std::string{}) << ','
        << format_double(row.min_y) << ',' << format_double(row.error);
    if (z_columns)
      for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < d; ++k) out << ',' << format_double(row.state.z(i, k));
    out << '\n';
  }
}

json constants_to_json(const BoundConstants& c) {
  return {{"n", c.n},
          {"B", c.B},
          {"p", c.p},
          {"delta", c.delta},
          {"log_delta", c.log_delta},
          {"lambda", c.lambda},
          {"log_lambda", c.log_lambda},
          {"log_one_minus_lambda", c.log_one_minus_lambda},
          {"c1", c.c1}};
}

json fit_to_json(const RateFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"points", f.points}};
}

json summary_json(const ExperimentResult& result) {
  json j;
  j["config"] = config_to_json(result.config);
  j["trials"] = result.config.trials;
  j["constants"] = result.constants ? constants_to_json(*result.constants) : json(nullptr);
  if (result.certificate) {
    const auto& c = *result.certificate;
    j["certificate"] = {{"optimizer", std::vector<double>(c.optimizer.data(), c.optimizer.data() + c.optimizer.size())},
                        {"value", c.value},
                        {"method", c.method},
                        {"confident", c.confident}};
  }
  if (result.bound_inputs) {
    const auto& b = *result.bound_inputs;
    j["bound"] = {{"lipschitz_sum", b.lipschitz_sum},
                  {"initial_norms", b.initial_norms},
                  {"log_bracket", rate_bound_bracket(b).log},
                  {"note", "bound(t) = Gamma(t-1, gamma) * exp(log_bracket)"}};
  }
  j["fit"] = result.fit ? fit_to_json(*result.fit) : json(nullptr);
  json bands = json::array();
  for (const auto& b : result.bands) bands.push_back({{"t", b.t}, {"low", b.low}, {"high", b.high}});
  j["bootstrap_band_95"] = std::move(bands);
  json gated = json::array();
  for (const auto& tr : result.trials) gated.push_back(tr.gated_rounds);
  j["gated_rounds_per_trial"] = std::move(gated);
  return j;
}

std::set<Format> parse_formats(const std::string& list) {
  std::set<Format> out;
  for (const auto& item : split(list, ',')) {
    if (item == "csv") out.insert(Format::csv);
    else if (item == "json") out.insert(Format::json);
    else throw ConfigError("unknown format '" + item + "' (expected csv or json)");
  }
  if (out.empty()) throw ConfigError("no output format selected");
  return out;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::vector<std::filesystem::path> emit(const ExperimentResult& result, const std::filesystem::path& dir,
                                        const std::set<Format>& formats) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  if (formats.contains(Format::csv)) {
    const auto path = dir / "metrics.csv";
    auto out = open_for_write(path);
    write_metrics_csv(out, result.rows);
    finish(out, path);
    written.push_back(path);

    for (const auto& tr : result.trials) {
      if (tr.trace.empty()) continue;
      const auto tpath = dir / ("trace_" + std::to_string(tr.trial) + ".csv");
      auto tout = open_for_write(tpath);
      write_trace_csv(tout, tr.trace, result.config.n() <= 10);
      finish(tout, tpath);
      written.push_back(tpath);
    }
  }
  if (formats.contains(Format::json)) {
    const auto path = dir / "summary.json";
    auto out = open_for_write(path);
    out << summary_json(result).dump(2) << '\n';
    finish(out, path);
    written.push_back(path);
  }
  return written;
}

}  // namespace pushsum
