// Command-line front end: validate | constants | run | fit.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pushsum/ensemble_io.hpp"
#include "pushsum/errors.hpp"
#include "pushsum/harness.hpp"
#include "pushsum/report.hpp"

namespace {

using nlohmann::json;
using namespace pushsum;

enum Exit : int { kOk = 0, kInvalid = 1, kConfig = 2, kIo = 3, kFit = 4, kInternal = 5 };

int fail(const std::string& type, const std::string& message, int code) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}}.dump() << '\n';
  return code;
}

// A file is an experiment config when it names an ensemble; otherwise it is an ensemble.
bool is_experiment_config(const json& doc) { return doc.is_object() && doc.contains("ensemble"); }

GraphEnsemble ensemble_from_file(const std::string& path) {
  const json doc = read_json_file(path);
  if (is_experiment_config(doc)) return load_config(path).ensemble;
  try {
    return ensemble_from_json(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void print_csv_constants(const BoundConstants& c) {
  std::cout << "n,B,p,delta,log_delta,lambda,log_lambda,log_one_minus_lambda,c1\n"
            << c.n << ',' << c.B << ',' << format_double(c.p) << ',' << format_double(c.delta) << ','
            << format_double(c.log_delta) << ',' << format_double(c.lambda) << ',' << format_double(c.log_lambda) << ','
            << format_double(c.log_one_minus_lambda) << ',' << format_double(c.c1) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Push-sum / subgradient-push simulator over random directed graphs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string format = "csv,json";
  std::optional<std::uint64_t> trials, horizon, seed;
  std::optional<double> gamma;
  std::optional<std::string> algo;
  std::optional<unsigned> workers;

  auto* validate = app.add_subcommand("validate", "Validate an ensemble file or experiment config");
  validate->add_option("--config,--ensemble", config_path, "Ensemble or experiment config (JSON)")->required();

  auto* constants = app.add_subcommand("constants", "Print the bound constants of an ensemble");
  constants->add_option("--config,--ensemble", config_path, "Ensemble or experiment config (JSON)")->required();
  constants->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto* run = app.add_subcommand("run", "Run a Monte Carlo experiment");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (overrides config)");
  run->add_option("--trials", trials, "Number of independent trials");
  run->add_option("--horizon", horizon, "Rounds per trial");
  run->add_option("--gamma", gamma, "Step-size exponent in (0.5, 1)");
  run->add_option("--seed", seed, "Base seed; trial k uses seed + k");
  run->add_option("--algo", algo, "pushsum | mpp | sp | msp")->check(CLI::IsMember({"pushsum", "mpp", "sp", "msp"}));
  run->add_option("--format", format, "Comma list of csv,json");
  run->add_option("--workers", workers, "Worker threads");

  std::string csv_path;
  std::string column = "gap_mean";
  std::vector<double> window;
  auto* fit = app.add_subcommand("fit", "Fit a log-log rate to the mean rows of a metrics CSV");
  fit->add_option("--csv", csv_path, "metrics.csv produced by run")->required();
  fit->add_option("--window", window, "low high")->expected(2);
  fit->add_option("--column", column, "gap_mean or gap_max")->check(CLI::IsMember({"gap_mean", "gap_max"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("UsageError", e.what(), kConfig);
  }

  try {
    if (validate->parsed()) {
      const json doc = read_json_file(config_path);
      json report;
      bool ok = false;
      if (is_experiment_config(doc)) {
        try {
          load_config(config_path);
          ok = true;
          report = {{"ok", true}, {"kind", "experiment"}};
        } catch (const ConfigError& e) {
          report = {{"ok", false}, {"kind", "experiment"}, {"errors", {e.what()}}};
        }
      } else {
        const auto r = validate_ensemble(parse_ensemble(doc));
        ok = r.ok();
        report = report_to_json(r);
        report["kind"] = "ensemble";
      }
      std::cout << report.dump(2) << '\n';
      return ok ? kOk : kInvalid;
    }

    if (constants->parsed()) {
      const auto c = bound_constants(ensemble_from_file(config_path));
      if (format == "csv") print_csv_constants(c);
      else std::cout << constants_to_json(c).dump(2) << '\n';
      return kOk;
    }

    if (run->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (trials) cfg.trials = *trials;
      if (horizon) cfg.horizon = *horizon;
      if (gamma) cfg.gamma = *gamma;
      if (seed) cfg.seed = *seed;
      if (algo) cfg.algo = parse_algorithm(*algo);
      if (workers) cfg.workers = *workers;
      validate_config(cfg);
      const auto formats = parse_formats(format);
      const auto result = run_experiment(cfg);
      const auto written = emit(result, cfg.out_dir, formats);
      json done = {{"ok", true}, {"files", json::array()}};
      for (const auto& p : written) done["files"].push_back(p.string());
      if (result.fit) done["fit"] = fit_to_json(*result.fit);
      std::cout << done.dump(2) << '\n';
      return kOk;
    }

    if (fit->parsed()) {
      std::ifstream in(csv_path);
      if (!in) throw IoError("cannot open " + csv_path);
      const auto rows = read_metrics_csv(in);
      double low = 100.0, high = 0.0;
      if (window.size() == 2) {
        low = window[0];
        high = window[1];
      } else {
        for (const auto& r : rows) high = std::max(high, static_cast<double>(r.t));
      }
      std::cout << fit_to_json(fit_rate(rows, low, high, column)).dump(2) << '\n';
      return kOk;
    }
  } catch (const ConfigError& e) {
    return fail("ConfigError", e.what(), kConfig);
  } catch (const IoError& e) {
    return fail("IoError", e.what(), kIo);
  } catch (const FitError& e) {
    return fail("FitError", e.what(), kFit);
  } catch (const DomainError& e) {
    return fail("DomainError", e.what(), kConfig);
  } catch (const std::exception& e) {
    return fail("InternalError", e.what(), kInternal);
  }
  return kOk;
}
