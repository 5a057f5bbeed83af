#include "pushsum/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "pushsum/ensemble_io.hpp"
#include "pushsum/errors.hpp"

namespace pushsum {

using nlohmann::json;

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::pushsum: return "pushsum";
    case Algorithm::mpp: return "mpp";
    case Algorithm::sp: return "sp";
    case Algorithm::msp: return "msp";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "pushsum") return Algorithm::pushsum;
  if (name == "mpp") return Algorithm::mpp;
  if (name == "sp") return Algorithm::sp;
  if (name == "msp") return Algorithm::msp;
  throw ConfigError("unknown algorithm '" + name + "' (expected pushsum, mpp, sp or msp)");
}

Index ExperimentConfig::d() const {
  if (objective) return objective->d;
  if (x0) return x0->cols();
  return 1;
}

namespace {

bool is_optimization(Algorithm a) { return a == Algorithm::sp || a == Algorithm::msp; }

VectorXd parse_point(const json& v, Index d) {
  if (v.is_number()) {
    if (d != 1) throw ConfigError("scalar point given for d = " + std::to_string(d));
    return VectorXd::Constant(1, v.get<double>());
  }
  const auto xs = v.get<std::vector<double>>();
  if (static_cast<Index>(xs.size()) != d)
    throw ConfigError("point has " + std::to_string(xs.size()) + " coordinates, expected " + std::to_string(d));
  return Eigen::Map<const VectorXd>(xs.data(), d);
}

Index point_dim(const json& v) { return v.is_array() ? static_cast<Index>(v.size()) : 1; }

json point_to_json(const VectorXd& v) {
  if (v.size() == 1) return v(0);
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::vector<std::string> errors;
  auto guard = [&errors](const char* field, auto&& fn) {
    try {
      fn();
    } catch (const json::exception& e) {
      errors.push_back(std::string(field) + ": " + e.what());
    } catch (const std::exception& e) {
      errors.push_back(std::string(field) + ": " + e.what());
    }
  };

  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  guard("ensemble", [&] {
    const json& e = doc.at("ensemble");
    if (e.is_string()) {
      std::filesystem::path p = e.get<std::string>();
      cfg.ensemble_source = p.string();
      if (p.is_relative()) p = base_dir / p;
      cfg.ensemble = load_ensemble(p);
    } else {
      cfg.ensemble_source = "inline";
      cfg.ensemble = ensemble_from_json(e);
    }
  });
  guard("n", [&] {
    if (doc.contains("n") && doc.at("n").get<Index>() != cfg.n())
      throw ConfigError("n = " + std::to_string(doc.at("n").get<Index>()) + " but the ensemble has " +
                        std::to_string(cfg.n()) + " nodes");
  });
  guard("objective", [&] {
    if (!doc.contains("objective")) return;
    const json& o = doc.at("objective");
    ObjectiveSpec spec;
    spec.family = o.value("family", "abs");
    if (spec.family != "abs" && spec.family != "huber" && spec.family != "constant")
      throw ConfigError("unknown objective family '" + spec.family + "'");
    if (o.contains("d")) spec.d = o.at("d").get<Index>();
    else if (o.contains("anchors") && !o.at("anchors").empty()) spec.d = point_dim(o.at("anchors").front());
    if (spec.d < 1) throw ConfigError("objective dimension d must be at least 1");
    spec.kappa = o.value("kappa", 1.0);
    spec.constant = o.value("value", 0.0);
    if (o.contains("anchors"))
      for (const auto& a : o.at("anchors")) spec.anchors.push_back(parse_point(a, spec.d));
    if (o.contains("random")) {
      const json& r = o.at("random");
      spec.random = RandomAnchors{r.value("low", -1.0), r.value("high", 1.0), r.value("seed", std::uint64_t{0})};
    }
    cfg.objective = std::move(spec);
  });
  guard("x0", [&] {
    if (!doc.contains("x0")) return;
    const json& x = doc.at("x0");
    if (!x.is_array() || x.empty()) throw ConfigError("x0 must be a non-empty list");
    const Index d = doc.contains("objective") && cfg.objective ? cfg.objective->d : point_dim(x.front());
    MatrixXd x0(static_cast<Index>(x.size()), d);
    for (std::size_t i = 0; i < x.size(); ++i) x0.row(static_cast<Index>(i)) = parse_point(x[i], d).transpose();
    cfg.x0 = std::move(x0);
  });
  guard("gamma", [&] { cfg.gamma = doc.value("gamma", kDefaultGamma); });
  guard("horizon", [&] { cfg.horizon = doc.value("horizon", std::uint64_t{1000}); });
  guard("trials", [&] { cfg.trials = doc.value("trials", std::uint64_t{1}); });
  guard("seed", [&] { cfg.seed = doc.value("seed", std::uint64_t{0}); });
  guard("algo", [&] { cfg.algo = parse_algorithm(doc.value("algo", std::string("msp"))); });
  guard("out", [&] { cfg.out_dir = doc.value("out", std::string("out")); });
  guard("workers", [&] { cfg.workers = doc.value("workers", 1u); });
  guard("checkpoints", [&] {
    if (doc.contains("checkpoints"))
      cfg.extra_checkpoints = doc.at("checkpoints").value("extra", std::vector<std::uint64_t>{});
  });
  guard("perturbation", [&] {
    if (doc.contains("perturbation")) cfg.perturbation_cap = doc.at("perturbation").value("U", 0.0);
  });
  guard("trace", [&] {
    if (!doc.contains("trace")) return;
    cfg.write_traces = doc.at("trace").value("write", true);
    cfg.trace_decimation = doc.at("trace").value("decimation", std::uint64_t{1});
  });
  guard("fit_window", [&] {
    if (!doc.contains("fit_window")) return;
    const auto w = doc.at("fit_window").get<std::vector<double>>();
    if (w.size() != 2) throw ConfigError("fit_window must be [low, high]");
    cfg.fit_low = w[0];
    cfg.fit_high = w[1];
  });
  guard("bootstrap_resamples", [&] { cfg.bootstrap_resamples = doc.value("bootstrap_resamples", std::uint64_t{1000}); });

  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += " [" + e + "]";
    throw ConfigError(msg);
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_json_file(path), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> errors;
  const auto report = validate_ensemble(cfg.ensemble);
  for (const auto& f : report.failures()) errors.push_back("ensemble " + f);
  if (cfg.horizon < 1) errors.push_back("horizon must be at least 1");
  if (cfg.trials < 1) errors.push_back("trials must be at least 1");
  if (!(cfg.gamma > 0.5 && cfg.gamma < 1.0)) errors.push_back("gamma must lie in (0.5, 1)");
  if (cfg.workers < 1) errors.push_back("workers must be at least 1");
  if (cfg.trace_decimation < 1) errors.push_back("trace decimation must be at least 1");
  if (cfg.perturbation_cap < 0.0) errors.push_back("perturbation U must be non-negative");
  if (cfg.perturbation_cap > 0.0 && cfg.algo != Algorithm::mpp)
    errors.push_back("perturbations apply only to the mpp algorithm");
  if (is_optimization(cfg.algo) && !cfg.objective) errors.push_back("algorithm " + to_string(cfg.algo) + " needs an objective");
  if (cfg.objective) {
    const auto& o = cfg.objective.value();
    if (o.family == "huber" && !(o.kappa > 0.0)) errors.push_back("Huber threshold kappa must be positive");
    if (o.family != "constant" && o.anchors.empty() && !o.random) errors.push_back("objective needs anchors or random anchors");
    if (!o.anchors.empty() && static_cast<Index>(o.anchors.size()) != cfg.n())
      errors.push_back("objective has " + std::to_string(o.anchors.size()) + " anchors for " + std::to_string(cfg.n()) +
                       " nodes");
    if (o.random && !(o.random->low < o.random->high)) errors.push_back("random anchor box needs low < high");
  }
  if (cfg.x0) {
    if (cfg.x0->rows() != cfg.n()) errors.push_back("x0 needs one entry per node");
    if (cfg.objective && cfg.x0->cols() != cfg.objective->d) errors.push_back("x0 dimension differs from objective d");
  }
  if (!(cfg.fit_low > 0.0) || (cfg.fit_high != 0.0 && cfg.fit_high < cfg.fit_low))
    errors.push_back("fit window must satisfy 0 < low <= high");
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += " [" + e + "]";
    throw ConfigError(msg);
  }
}

json config_to_json(const ExperimentConfig& cfg) {
  json j = {{"ensemble", cfg.ensemble_source},
            {"n", cfg.n()},
            {"d", cfg.d()},
            {"gamma", cfg.gamma},
            {"horizon", cfg.horizon},
            {"trials", cfg.trials},
            {"seed", cfg.seed},
            {"algo", to_string(cfg.algo)},
            {"checkpoints", {{"extra", cfg.extra_checkpoints}}},
            {"fit_window", {cfg.fit_low, cfg.fit_high == 0.0 ? static_cast<double>(cfg.horizon) : cfg.fit_high}},
            {"bootstrap_resamples", cfg.bootstrap_resamples}};
  if (cfg.algo == Algorithm::mpp) j["perturbation"] = {{"U", cfg.perturbation_cap}};
  if (cfg.objective) {
    const auto& o = *cfg.objective;
    json obj = {{"family", o.family}, {"d", o.d}};
    if (o.family == "huber") obj["kappa"] = o.kappa;
    if (o.family == "constant") obj["value"] = o.constant;
    if (!o.anchors.empty()) {
      json anchors = json::array();
      for (const auto& a : o.anchors) anchors.push_back(point_to_json(a));
      obj["anchors"] = std::move(anchors);
    }
    if (o.random) obj["random"] = {{"low", o.random->low}, {"high", o.random->high}, {"seed", o.random->seed}};
    j["objective"] = std::move(obj);
  }
  if (cfg.x0) {
    json x = json::array();
    for (Index i = 0; i < cfg.x0->rows(); ++i) x.push_back(point_to_json(cfg.x0->row(i).transpose()));
    j["x0"] = std::move(x);
  }
  return j;
}

ObjectiveFamily<double> build_family(const ObjectiveSpec& spec, Index n) {
  std::vector<VectorXd> anchors = spec.anchors;
  if (anchors.empty() && spec.random) {
    Engine engine = make_stream(spec.random->seed, streams::anchors);
    for (Index i = 0; i < n; ++i) {
      VectorXd a(spec.d);
      for (Index k = 0; k < spec.d; ++k) a(k) = uniform(engine, spec.random->low, spec.random->high);
      anchors.push_back(std::move(a));
    }
  }
  std::vector<ObjectivePtr<double>> members;
  for (Index i = 0; i < n; ++i) {
    if (spec.family == "constant") members.push_back(constant_objective<double>(spec.d, spec.constant));
    else if (static_cast<Index>(anchors.size()) != n) throw ConfigError("objective needs one anchor per node");
    else if (spec.family == "abs") members.push_back(abs_objective<double>(anchors[static_cast<std::size_t>(i)]));
    else if (spec.family == "huber") members.push_back(huber_objective<double>(anchors[static_cast<std::size_t>(i)], spec.kappa));
    else throw ConfigError("unknown objective family '" + spec.family + "'");
  }
  return ObjectiveFamily<double>(std::move(members));
}

MatrixXd initial_states(const ExperimentConfig& cfg, const ObjectiveFamily<double>* fam) {
  if (cfg.x0) return *cfg.x0;
  const Index n = cfg.n();
  MatrixXd x0 = MatrixXd::Zero(n, cfg.d());
  if (fam) {
    for (Index i = 0; i < n; ++i)
      if (auto a = fam->member(i).anchor()) x0.row(i) = a->transpose();
  }
  return x0;
}

TrialResult run_trial(const ExperimentConfig& cfg, const ObjectiveFamily<double>* fam, std::uint64_t trial) {
  TrialResult out;
  out.trial = trial;
  const std::uint64_t seed = cfg.seed + trial;
  const auto points = geometric_checkpoints(cfg.horizon, cfg.extra_checkpoints);
  const MatrixXd x0 = initial_states(cfg, fam);

  if (is_optimization(cfg.algo)) {
    if (!fam) throw ConfigError("optimization run without an objective");
    OptimizationOptions opts;
    opts.variant = cfg.algo == Algorithm::sp ? Variant::sp : Variant::msp;
    opts.checkpoints = points;
    opts.keep_trace = cfg.write_traces;
    auto run = run_optimization(cfg.ensemble, *fam, x0, cfg.gamma, cfg.horizon, seed, opts);
    for (const auto& cp : run.checkpoints) {
      MetricsRow row;
      row.trial = trial;
      row.t = cp.t;
      row.graph_id = cp.graph_id;
      row.gap_max = cp.gap_max;
      row.gap_mean = cp.gap_mean;
      row.consensus_error = cp.consensus_error;
      row.min_y = cp.min_y;
      row.bound = cp.bound;
      if (cp.bound) row.ratio = bound_ratio(std::max(cp.gap_max, 0.0), *cp.bound);
      out.rows.push_back(row);
    }
    out.gated_rounds = run.gated_rounds;
    if (cfg.write_traces)
      for (auto& r : run.trace)
        if (r.t % cfg.trace_decimation == 0 || r.t == cfg.horizon) out.trace.push_back(std::move(r));
    return out;
  }

  GraphSequenceSampler sampler(cfg.ensemble, seed);
  const auto schedule = cfg.perturbation_cap > 0.0 ? uniform_perturbations<double>(cfg.perturbation_cap, cfg.gamma, seed)
                                                   : zero_perturbations<double>();
  const double delta = cfg.algo == Algorithm::pushsum ? 0.0 : gating_threshold(cfg.n());
  NodeState<double> state = NodeState<double>::initial(x0);
  if (cfg.write_traces) out.trace.push_back(initial_trace(state));
  auto next_point = points.begin();
  for (std::uint64_t t = 0; t < cfg.horizon; ++t) {
    const auto draw = sampler.next();
    auto row = mpp_step(state, t, *draw.graph, draw.id, schedule, delta);
    state = row.state;
    if (!row.gated.empty()) ++out.gated_rounds;
    if (next_point != points.end() && *next_point == row.t) {
      MetricsRow m;
      m.trial = trial;
      m.t = row.t;
      m.graph_id = draw.id;
      m.consensus_error = row.error;
      m.min_y = row.min_y;
      out.rows.push_back(m);
      ++next_point;
    }
    if (cfg.write_traces && (row.t % cfg.trace_decimation == 0 || row.t == cfg.horizon)) out.trace.push_back(std::move(row));
  }
  return out;
}

std::vector<MetricsRow> aggregate(std::vector<TrialResult> trials) {
  std::sort(trials.begin(), trials.end(), [](const auto& a, const auto& b) { return a.trial < b.trial; });
  std::vector<MetricsRow> means;
  if (trials.empty()) return means;
  const std::size_t rows = trials.front().rows.size();
  const double m = static_cast<double>(trials.size());
  for (std::size_t k = 0; k < rows; ++k) {
    MetricsRow mean;
    mean.t = trials.front().rows[k].t;
    double gap_max = 0.0, gap_mean = 0.0, err = 0.0, min_y = 0.0;
    bool has_gap = true;
    for (const auto& tr : trials) {
      const auto& r = tr.rows.at(k);
      if (r.t != mean.t) throw ContractViolation("trials disagree on checkpoints");
      has_gap = has_gap && r.gap_max && r.gap_mean;
      if (has_gap) {
        gap_max += *r.gap_max;
        gap_mean += *r.gap_mean;
      }
      err += r.consensus_error;
      min_y += r.min_y;
    }
    if (has_gap) {
      mean.gap_max = gap_max / m;
      mean.gap_mean = gap_mean / m;
    }
    mean.consensus_error = err / m;
    mean.min_y = min_y / m;
    mean.bound = trials.front().rows[k].bound;
    if (mean.bound && mean.gap_max) mean.ratio = bound_ratio(std::max(*mean.gap_max, 0.0), *mean.bound);
    means.push_back(mean);
  }
  return means;
}

namespace {

std::vector<Band> bootstrap_bands(const std::vector<TrialResult>& trials, std::uint64_t resamples, std::uint64_t seed) {
  std::vector<Band> bands;
  if (trials.empty() || resamples == 0) return bands;
  Engine engine = make_stream(seed, streams::bootstrap);
  const std::size_t m = trials.size();
  std::vector<double> means(resamples);
  for (std::size_t k = 0; k < trials.front().rows.size(); ++k) {
    if (!trials.front().rows[k].gap_mean) continue;
    for (auto& mean : means) {
      double acc = 0.0;
      for (std::size_t draw = 0; draw < m; ++draw) {
        const auto pick = std::min(m - 1, static_cast<std::size_t>(uniform01(engine) * static_cast<double>(m)));
        acc += *trials[pick].rows[k].gap_mean;
      }
      mean = acc / static_cast<double>(m);
    }
    std::sort(means.begin(), means.end());
    const auto lo = static_cast<std::size_t>(std::floor(0.025 * static_cast<double>(resamples - 1)));
    const auto hi = static_cast<std::size_t>(std::ceil(0.975 * static_cast<double>(resamples - 1)));
    bands.push_back({trials.front().rows[k].t, means[lo], means[hi]});
  }
  return bands;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ExperimentResult result;
  result.config = cfg;

  std::optional<ObjectiveFamily<double>> fam;
  if (cfg.objective) {
    fam = build_family(*cfg.objective, cfg.n());
    const auto cert = solve_centralized(*fam);
    fam->set_certificate(cert);
    result.certificate = cert;
  }
  if (cfg.n() >= 2) result.constants = bound_constants(cfg.ensemble);
  if (fam && is_optimization(cfg.algo) && result.constants)
    result.bound_inputs = make_rate_bound_inputs(initial_states(cfg, &*fam), result.certificate->optimizer,
                                                 fam->lipschitz_sum(), cfg.gamma, *result.constants);

  const auto count = static_cast<std::size_t>(cfg.trials);
  std::vector<TrialResult> trials(count);
  std::vector<std::exception_ptr> failures(count);
  std::atomic<std::size_t> next{0};
  const ObjectiveFamily<double>* fam_ptr = fam ? &*fam : nullptr;
  {
    const unsigned pool = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, cfg.workers), count));
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < pool; ++w) {
      workers.emplace_back([&] {
        for (std::size_t k = next++; k < count; k = next++) {
          try {
            trials[k] = run_trial(cfg, fam_ptr, k);
          } catch (...) {
            failures[k] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  for (const auto& tr : trials) result.rows.insert(result.rows.end(), tr.rows.begin(), tr.rows.end());
  const auto means = aggregate(trials);
  result.rows.insert(result.rows.end(), means.begin(), means.end());

  if (is_optimization(cfg.algo)) {
    const double high = cfg.fit_high == 0.0 ? static_cast<double>(cfg.horizon) : cfg.fit_high;
    try {
      result.fit = fit_rate(means, cfg.fit_low, high);
    } catch (const FitError&) {
    }
    result.bands = bootstrap_bands(trials, cfg.bootstrap_resamples, cfg.seed);
  }
  result.trials = std::move(trials);
  return result;
}

RateFit fit_power_law(std::span<const double> t, std::span<const double> gap, double low, double high) {
  if (t.size() != gap.size()) throw DimensionError("fit needs matching t and gap columns");
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] >= low && t[k] <= high && gap[k] > 0.0 && std::isfinite(gap[k])) {
      xs.push_back(std::log(t[k]));
      ys.push_back(std::log(gap[k]));
    }
  }
  if (xs.size() < 3) throw FitError("rate fit needs at least 3 checkpoints with positive gap in the window, got " +
                                    std::to_string(xs.size()));
  const auto m = static_cast<Index>(xs.size());
  MatrixXd A(m, 2);
  A.col(0).setOnes();
  A.col(1) = Eigen::Map<const VectorXd>(xs.data(), m);
  const Eigen::Map<const VectorXd> b(ys.data(), m);
  const VectorXd coef = A.colPivHouseholderQr().solve(b);

  RateFit fit;
  fit.intercept = coef(0);
  fit.slope = coef(1);
  fit.points = xs.size();
  const double ss_res = (A * coef - b).squaredNorm();
  const double ss_tot = (b.array() - b.mean()).matrix().squaredNorm();
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

RateFit fit_rate(std::span<const MetricsRow> rows, double low, double high, const std::string& column) {
  if (column != "gap_mean" && column != "gap_max") throw ConfigError("fit column must be gap_mean or gap_max");
  std::vector<double> t, gap;
  for (const auto& r : rows) {
    if (r.trial) continue;
    const auto& v = column == "gap_mean" ? r.gap_mean : r.gap_max;
    if (!v) continue;
    t.push_back(static_cast<double>(r.t));
    gap.push_back(*v);
  }
  return fit_power_law(t, gap, low, high);
}

std::vector<BoundComparison> compare_bound(std::span<const MetricsRow> rows, const RateBoundInputs& inputs) {
  std::vector<BoundComparison> out;
  for (const auto& r : rows) {
    if (!r.gap_max || r.t < 1) continue;
    BoundComparison c;
    c.t = r.t;
    c.gap = *r.gap_max;
    c.bound = expected_gap_bound(inputs, static_cast<double>(r.t - 1));
    c.ratio = bound_ratio(std::max(c.gap, 0.0), c.bound);
    out.push_back(c);
  }
  return out;
}

}  // namespace pushsum
