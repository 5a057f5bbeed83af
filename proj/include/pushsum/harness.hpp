#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pushsum/bounds.hpp"
#include "pushsum/consensus.hpp"
#include "pushsum/graph.hpp"
#include "pushsum/objectives.hpp"
#include "pushsum/optimize.hpp"

namespace pushsum {

enum class Algorithm { pushsum, mpp, sp, msp };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);  // ConfigError on unknown names

struct RandomAnchors {
  double low = -1.0;
  double high = 1.0;
  std::uint64_t seed = 0;
};

struct ObjectiveSpec {
  std::string family = "abs";   // abs | huber | constant
  Index d = 1;
  std::vector<VectorXd> anchors;  // explicit, one per node
  std::optional<RandomAnchors> random;
  double kappa = 1.0;
  double constant = 0.0;
};

struct ExperimentConfig {
  std::string ensemble_source;  // path as written, or "inline"
  GraphEnsemble ensemble;
  std::optional<ObjectiveSpec> objective;
  std::optional<MatrixXd> x0;
  double gamma = kDefaultGamma;
  std::uint64_t horizon = 1000;
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> extra_checkpoints;
  std::filesystem::path out_dir = "out";
  Algorithm algo = Algorithm::msp;
  double perturbation_cap = 0.0;  // U for mpp; 0 means no perturbation
  unsigned workers = 1;
  bool write_traces = false;
  std::uint64_t trace_decimation = 1;
  double fit_low = 100.0;
  double fit_high = 0.0;  // 0 means the horizon
  std::uint64_t bootstrap_resamples = 1000;

  Index n() const { return ensemble.node_count(); }
  Index d() const;
};

/// Parses an experiment config. Relative ensemble paths resolve against `base_dir`.
/// Every problem found is reported in one ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);
/// Re-checks the invariants after command-line overrides.
void validate_config(const ExperimentConfig& cfg);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

ObjectiveFamily<double> build_family(const ObjectiveSpec& spec, Index n);
/// Explicit x0, else the objective anchors, else zeros.
MatrixXd initial_states(const ExperimentConfig& cfg, const ObjectiveFamily<double>* fam);

struct MetricsRow {
  std::optional<std::uint64_t> trial;  // empty for the mean-over-trials rows
  std::uint64_t t = 0;
  std::optional<std::size_t> graph_id;  // 0-based internally, written 1-based
  std::optional<double> gap_max;
  std::optional<double> gap_mean;
  double consensus_error = 0.0;
  double min_y = 0.0;
  std::optional<LogValue> bound;
  std::optional<double> ratio;
};

struct TrialResult {
  std::uint64_t trial = 0;
  std::vector<MetricsRow> rows;
  std::vector<RoundTrace<double>> trace;
  std::uint64_t gated_rounds = 0;  // rounds in which min_y fell below delta
};

struct Band {
  std::uint64_t t = 0;
  double low = 0.0;
  double high = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<MetricsRow> rows;  // trial rows by (trial, t), then mean rows by t
  std::vector<TrialResult> trials;
  std::optional<BoundConstants> constants;
  std::optional<Certificate<double>> certificate;
  std::optional<RateBoundInputs> bound_inputs;
  std::optional<RateFit> fit;
  std::vector<Band> bands;  // bootstrap 95% band of the mean gap per checkpoint
};

TrialResult run_trial(const ExperimentConfig& cfg, const ObjectiveFamily<double>* fam, std::uint64_t trial);

/// Mean-over-trials rows. Trials are ordered by id first, so the result does not depend on
/// completion order.
std::vector<MetricsRow> aggregate(std::vector<TrialResult> trials);

/// Runs every trial (seed = base + trial) on a bounded worker pool and aggregates.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Least-squares line through (log t, log gap) for t in [low, high] and gap > 0.
/// Throws FitError with fewer than three usable points.
RateFit fit_power_law(std::span<const double> t, std::span<const double> gap, double low, double high);
/// Fits the mean-over-trials rows on the chosen column ("gap_mean" or "gap_max").
RateFit fit_rate(std::span<const MetricsRow> rows, double low, double high, const std::string& column = "gap_mean");

struct BoundComparison {
  std::uint64_t t = 0;
  double gap = 0.0;
  LogValue bound;
  double ratio = 0.0;
};

/// gap_max / bound for every row carrying a gap; bound taken at t-1 (bound for z̃(t)).
std::vector<BoundComparison> compare_bound(std::span<const MetricsRow> rows, const RateBoundInputs& inputs);

}  // namespace pushsum
