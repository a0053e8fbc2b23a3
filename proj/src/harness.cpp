// Metric extraction, the backlog-drift diagnostic, growth-rate fitting,
// competitive-ratio experiments on the phased hard instances, and the Monte
// Carlo experiment runner with its CSV/JSON writers and config parser.
#include "ccb/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ccb {
namespace {

using nlohmann::json;

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string tag_name(FeasibilityTag tag) {
  switch (tag) {
    case FeasibilityTag::kInExpectation: return "in_expectation";
    case FeasibilityTag::kSlater: return "slater";
    case FeasibilityTag::kAlmostSure: return "almost_sure";
    case FeasibilityTag::kLongTerm: return "long_term";
  }
  throw std::logic_error("tag_name: unreachable");
}

FeasibilityTag tag_from_name(const std::string& name) {
  if (name == "in_expectation") return FeasibilityTag::kInExpectation;
  if (name == "slater") return FeasibilityTag::kSlater;
  if (name == "almost_sure") return FeasibilityTag::kAlmostSure;
  if (name == "long_term") return FeasibilityTag::kLongTerm;
  throw std::invalid_argument("config_from_json: unknown benchmark kind '" + name + "'");
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double se_of(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double n = static_cast<double>(xs.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

}  // namespace

MetricSeries compute_metrics(const RunTrace& trace, const StationaryPolicy& benchmark,
                             const ProblemInstance& instance) {
  validate_instance(instance);
  const std::size_t m = static_cast<std::size_t>(instance.num_resources());
  const std::size_t horizon = trace.rounds.size();
  MetricSeries out;
  out.pseudo_regret.reserve(horizon);
  out.realized_regret.reserve(horizon);
  out.ccv.reserve(horizon);
  out.cost_sums.assign(m, {});
  out.queues.assign(m, {});
  for (std::size_t i = 0; i < m; ++i) {
    out.cost_sums[i].reserve(horizon);
    out.queues[i].reserve(horizon);
  }
  const double budget_offset =
      benchmark.kind == FeasibilityTag::kLongTerm ? instance.budget : 0.0;
  double pseudo = 0.0;
  double realized = 0.0;
  std::vector<double> spent(m, 0.0);
  for (const RoundRecord& rec : trace.rounds) {
    if (rec.context < 0 ||
        rec.context >= static_cast<int>(benchmark.context_values.size())) {
      throw std::invalid_argument(
          "compute_metrics: trace context missing from the benchmark policy");
    }
    if (rec.context >= instance.num_contexts || rec.action < 0 ||
        rec.action >= instance.num_arms) {
      throw std::invalid_argument("compute_metrics: trace does not fit the instance");
    }
    if (rec.costs.size() != m || rec.queue_after.size() != m) {
      throw std::invalid_argument("compute_metrics: resource count mismatch in trace");
    }
    const double bench = benchmark.context_values[static_cast<std::size_t>(rec.context)];
    pseudo += bench - instance.f_star[static_cast<std::size_t>(rec.context)]
                                     [static_cast<std::size_t>(rec.action)];
    realized += bench - rec.reward;
    out.pseudo_regret.push_back(pseudo);
    out.realized_regret.push_back(realized);
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      spent[i] += rec.costs[i];
      out.cost_sums[i].push_back(spent[i]);
      out.queues[i].push_back(rec.queue_after[i]);
      worst = i == 0 ? spent[i] : std::max(worst, spent[i]);
    }
    out.ccv.push_back(worst - budget_offset);
  }
  return out;
}

DriftDiagnostic drift_diagnostic(const std::vector<RunTrace>& traces,
                                 const StationaryPolicy& benchmark,
                                 const ProblemInstance& instance, PhiKind kind,
                                 double u_t) {
  if (traces.size() < 30) {
    throw std::invalid_argument("drift_diagnostic: at least 30 seeds are required");
  }
  if (benchmark.kind != FeasibilityTag::kInExpectation) {
    throw std::invalid_argument(
        "drift_diagnostic: the envelope is stated for the round-wise in-expectation "
        "benchmark");
  }
  if (!(u_t > 0.0) || !std::isfinite(u_t)) {
    throw std::invalid_argument("drift_diagnostic: error budget must be positive");
  }
  const std::size_t horizon = traces[0].rounds.size();
  const double phi_param = traces[0].phi_param;
  for (const RunTrace& trace : traces) {
    if (trace.rounds.size() != horizon || trace.phi_param != phi_param) {
      throw std::invalid_argument(
          "drift_diagnostic: traces must share one horizon and potential parameter");
    }
  }
  const std::size_t m = static_cast<std::size_t>(instance.num_resources());
  const double k_arms = static_cast<double>(instance.num_arms);
  const std::size_t n = traces.size();

  DriftDiagnostic out;
  out.lhs.assign(horizon + 1, 0.0);
  out.rhs.assign(horizon + 1, 0.0);
  out.slack.assign(horizon + 1, 0.0);
  out.slack_se.assign(horizon + 1, 0.0);
  std::vector<double> slack_sq(horizon + 1, 0.0);

  const double phi_zero =
      static_cast<double>(m) * phi_eval(kind, phi_param, 0.0).value;
  const double slope_zero = phi_eval(kind, phi_param, 0.0).slope;

  for (const RunTrace& trace : traces) {
    const MetricSeries metrics = compute_metrics(trace, benchmark, instance);
    double curv_sum = 0.0;
    double slope_sq_sum = static_cast<double>(m) * slope_zero * slope_zero;
    for (std::size_t t = 1; t <= horizon; ++t) {
      const RoundRecord& rec = trace.rounds[t - 1];
      double phi_now = 0.0;
      double curv_now = 0.0;
      double slope_sq_now = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const PhiValue pv = phi_eval(kind, phi_param, rec.queue_after[i]);
        phi_now += pv.value;
        curv_now += pv.curvature;
        slope_sq_now += pv.slope * pv.slope;
      }
      curv_sum += curv_now;
      const double lhs = phi_now - phi_zero + metrics.pseudo_regret[t - 1];
      const double rhs = 4.0 * std::sqrt(k_arms * u_t * static_cast<double>(t)) +
                         curv_sum + 4.0 * std::sqrt(k_arms * u_t) * std::sqrt(slope_sq_sum);
      slope_sq_sum += slope_sq_now;
      const double slack = rhs - lhs;
      out.lhs[t] += lhs;
      out.rhs[t] += rhs;
      out.slack[t] += slack;
      slack_sq[t] += slack * slack;
    }
  }
  const double count = static_cast<double>(n);
  for (std::size_t t = 1; t <= horizon; ++t) {
    out.lhs[t] /= count;
    out.rhs[t] /= count;
    const double mean = out.slack[t] / count;
    out.slack[t] = mean;
    const double var = std::max(0.0, (slack_sq[t] - count * mean * mean) / (count - 1.0));
    out.slack_se[t] = std::sqrt(var / count);
  }
  return out;
}

RateFit rate_fit(const std::vector<double>& horizons, const std::vector<double>& means) {
  if (horizons.size() != means.size()) {
    throw std::invalid_argument("rate_fit: one mean per horizon required");
  }
  if (horizons.size() < 2) {
    throw std::invalid_argument("rate_fit: at least two points required");
  }
  RateFit out;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (!(horizons[i] > 0.0)) {
      throw std::invalid_argument("rate_fit: horizons must be positive");
    }
    if (!(means[i] > 0.0) || !std::isfinite(means[i])) {
      out.dropped.push_back(i);
      continue;
    }
    xs.push_back(std::log(horizons[i]));
    ys.push_back(std::log(std::max(means[i], 1e-9)));
  }
  if (xs.size() < 2) {
    throw std::invalid_argument("rate_fit: fewer than two positive means");
  }
  const double xbar = mean_of(xs);
  const double ybar = mean_of(ys);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  if (sxx == 0.0) {
    throw std::invalid_argument("rate_fit: horizons must not all coincide");
  }
  out.slope = sxy / sxx;
  out.intercept = ybar - out.slope * xbar;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fit = out.intercept + out.slope * xs[i];
    ss_res += (ys[i] - fit) * (ys[i] - fit);
    ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
  }
  out.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return out;
}

RatioReport equalized_ratio_table(long long horizon, long long budget) {
  const ProblemInstance probe = make_lower_bound_instance(horizon, budget, 1);
  const int phases = probe.num_contexts;
  const EqualizedAllocation eq = equalized_allocation(phases);
  RatioReport out;
  out.analytic_floor = eq.ratio;
  for (int peak = 1; peak <= phases; ++peak) {
    const ProblemInstance inst = make_lower_bound_instance(horizon, budget, peak);
    RatioRow row;
    row.peak_phase = peak;
    row.opt = long_term_lp(inst, context_weights(inst, horizon),
                           static_cast<double>(budget))
                  .value;
    double alg = 0.0;
    for (int phase = 1; phase <= phases; ++phase) {
      alg += eq.alpha[static_cast<std::size_t>(phase - 1)] *
             static_cast<double>(budget) *
             inst.f_star[static_cast<std::size_t>(phase - 1)][1];
    }
    row.alg = alg;
    row.ratio = row.opt / std::max(alg, 1e-12);
    out.worst_ratio = std::max(out.worst_ratio, row.ratio);
    out.rows.push_back(row);
  }
  return out;
}

RatioReport competitive_ratio_experiment(long long horizon, long long budget,
                                         PhiKind kind, const HardStopSpec& scaling,
                                         const std::vector<std::uint64_t>& seeds,
                                         double floor) {
  if (seeds.empty()) {
    throw std::invalid_argument("competitive_ratio_experiment: seeds required");
  }
  if (!(floor > 0.0)) {
    throw std::invalid_argument("competitive_ratio_experiment: floor must be positive");
  }
  const ProblemInstance probe = make_lower_bound_instance(horizon, budget, 1);
  const int phases = probe.num_contexts;
  std::vector<Table> peak_hypotheses;
  peak_hypotheses.reserve(static_cast<std::size_t>(phases));
  for (int peak = 1; peak <= phases; ++peak) {
    peak_hypotheses.push_back(make_lower_bound_instance(horizon, budget, peak).f_star);
  }
  const double u_t = std::max(1.0, 8.0 * std::log(static_cast<double>(phases)));
  RatioReport out;
  out.analytic_floor = equalized_allocation(phases).ratio;
  for (int peak = 1; peak <= phases; ++peak) {
    const ProblemInstance inst = make_lower_bound_instance(horizon, budget, peak);
    RatioRow row;
    row.peak_phase = peak;
    row.opt = long_term_lp(inst, context_weights(inst, horizon),
                           static_cast<double>(budget))
                  .value;
    double total = 0.0;
    for (std::uint64_t seed : seeds) {
      ControllerConfig config;
      config.reward_oracle = FiniteClassOracle(peak_hypotheses);
      config.cost_oracles.push_back(
          FiniteClassOracle(std::vector<Table>{inst.g_star[0]}));
      config.phi_kind = kind;
      config.u_t = u_t;
      const RunTrace trace =
          hard_stop_run(inst, config, horizon, static_cast<double>(budget), scaling,
                        derive_seed(seed, static_cast<std::uint64_t>(peak)));
      for (const RoundRecord& rec : trace.rounds) total += rec.reward;
    }
    row.alg = total / static_cast<double>(seeds.size());
    row.ratio = row.opt / std::max(row.alg, floor);
    out.worst_ratio = std::max(out.worst_ratio, row.ratio);
    out.rows.push_back(row);
  }
  return out;
}

double budget_for(const BudgetRule& rule, long long horizon, double fallback) {
  switch (rule.kind) {
    case BudgetRule::Kind::kNone: return fallback;
    case BudgetRule::Kind::kFixed: return rule.value;
    case BudgetRule::Kind::kSqrt:
      return rule.value * std::sqrt(static_cast<double>(horizon));
    case BudgetRule::Kind::kFraction:
      return rule.value * static_cast<double>(horizon);
  }
  throw std::logic_error("budget_for: unreachable");
}

StationaryPolicy benchmark_for(const ProblemInstance& instance, FeasibilityTag kind,
                               long long horizon) {
  if (kind == FeasibilityTag::kLongTerm && instance.null_arm < 0) {
    ProblemInstance augmented = instance;
    augmented.null_arm = augmented.num_arms;
    augmented.num_arms += 1;
    for (auto& row : augmented.f_star) row.push_back(0.0);
    for (auto& table : augmented.g_star) {
      for (auto& row : table) row.push_back(0.0);
    }
    return benchmark_policy(augmented, kind, horizon);
  }
  return benchmark_policy(instance, kind, horizon);
}

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) {
    throw std::invalid_argument("config_from_json: " + field + ": " + what);
  }
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config_from_json: ") + e.what());
  }
  ExperimentConfig config;
  try {
    require(j.value("schema", "") == std::string("ccbandit-config-v1"), "schema",
            "expected ccbandit-config-v1");
    config.name = j.value("name", std::string("experiment"));
    require(!config.name.empty(), "name", "must not be empty");
    const json& inst = j.at("instance");
    if (inst.is_string()) {
      config.instance = load_instance(inst.get<std::string>());
    } else {
      config.instance = instance_from_json(inst.dump());
    }
    if (j.contains("oracle")) {
      const json& oracle = j.at("oracle");
      config.oracle.decoys = oracle.value("decoys", 7);
      require(config.oracle.decoys >= 0, "oracle.decoys", "must be non-negative");
      config.oracle.eta = oracle.value("eta", 0.125);
      require(config.oracle.eta > 0.0, "oracle.eta", "must be positive");
      if (oracle.contains("reward_tables")) {
        config.oracle.reward_tables =
            oracle.at("reward_tables").get<std::vector<Table>>();
        config.oracle.cost_tables =
            oracle.value("cost_tables", std::vector<std::vector<Table>>{});
      }
    }
    if (j.contains("lyapunov")) {
      const json& lyap = j.at("lyapunov");
      const std::string kind = lyap.value("kind", "quadratic");
      if (kind == "quadratic") {
        config.phi_kind = PhiKind::kQuadratic;
      } else if (kind == "exponential") {
        config.phi_kind = PhiKind::kExponential;
      } else {
        require(false, "lyapunov.kind", "unknown kind '" + kind + "'");
      }
      config.phi_param = lyap.value("param", 0.0);
    }
    if (j.contains("u_t") && !j.at("u_t").is_string()) {
      config.u_t = j.at("u_t").get<double>();
    }
    if (j.contains("cost_shift") && !j.at("cost_shift").is_string()) {
      config.cost_shift = j.at("cost_shift").get<double>();
      require(config.cost_shift >= 0.0 && config.cost_shift <= 1.0, "cost_shift",
              "must lie in [0, 1]");
    }
    if (j.contains("budget_rule")) {
      const json& rule = j.at("budget_rule");
      const std::string kind = rule.at("kind").get<std::string>();
      if (kind == "fixed") {
        config.budget_rule.kind = BudgetRule::Kind::kFixed;
      } else if (kind == "sqrt") {
        config.budget_rule.kind = BudgetRule::Kind::kSqrt;
      } else if (kind == "fraction") {
        config.budget_rule.kind = BudgetRule::Kind::kFraction;
      } else {
        require(false, "budget_rule.kind", "unknown kind '" + kind + "'");
      }
      config.budget_rule.value = rule.at("value").get<double>();
      require(config.budget_rule.value >= 0.0, "budget_rule.value",
              "must be non-negative");
    }
    if (j.contains("benchmark")) {
      config.benchmark = tag_from_name(j.at("benchmark").get<std::string>());
    }
    config.horizons = j.at("horizons").get<std::vector<long long>>();
    require(!config.horizons.empty(), "horizons", "must not be empty");
    for (std::size_t i = 0; i < config.horizons.size(); ++i) {
      require(config.horizons[i] >= 1, "horizons", "entries must be at least 1");
      if (i > 0) {
        require(config.horizons[i] > config.horizons[i - 1], "horizons",
                "must be strictly ascending");
      }
    }
    const json& seeds = j.at("seeds");
    if (seeds.is_number_integer()) {
      const long long count = seeds.get<long long>();
      require(count >= 1, "seeds", "count must be at least 1");
      for (long long s = 0; s < count; ++s) {
        config.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    } else {
      config.seeds = seeds.get<std::vector<std::uint64_t>>();
      require(!config.seeds.empty(), "seeds", "must not be empty");
    }
    if (j.contains("hard_stop")) {
      config.use_hard_stop = true;
      const json& stop = j.at("hard_stop");
      const std::string kind = stop.at("kind").get<std::string>();
      if (kind == "multiplicative") {
        config.hard_stop.kind = HardStopSpec::Kind::kMultiplicative;
      } else if (kind == "additive") {
        config.hard_stop.kind = HardStopSpec::Kind::kAdditive;
      } else {
        require(false, "hard_stop.kind", "unknown kind '" + kind + "'");
      }
      config.hard_stop.value = stop.at("value").get<double>();
    }
    if (j.contains("ensemble")) {
      const json& ensemble = j.at("ensemble");
      if (ensemble.is_boolean()) {
        config.use_ensemble = ensemble.get<bool>();
      } else {
        config.use_ensemble = true;
        config.guesses = ensemble.value("guesses", std::vector<double>{});
      }
    }
    require(!(config.use_hard_stop && config.use_ensemble), "ensemble",
            "hard_stop and ensemble cannot be combined");
    config.write_traces = j.value("write_traces", false);
    config.out_dir = j.value("out_dir", std::string());
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config_from_json: ") + e.what());
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("load_config: cannot open " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

namespace {

struct CellOracles {
  std::vector<Table> reward;
  std::vector<std::vector<Table>> cost;
};

Table random_table(int num_contexts, int num_arms, Rng& rng) {
  Table table(static_cast<std::size_t>(num_contexts),
              std::vector<double>(static_cast<std::size_t>(num_arms), 0.0));
  for (auto& row : table) {
    for (double& v : row) v = 2.0 * rng.uniform01() - 1.0;
  }
  return table;
}

void check_table_dims(const std::vector<Table>& tables, const ProblemInstance& inst,
                      const char* field) {
  for (const Table& table : tables) {
    if (table.size() != static_cast<std::size_t>(inst.num_contexts)) {
      throw std::invalid_argument(std::string("run_experiment: ") + field +
                                  ": context count mismatch");
    }
    for (const auto& row : table) {
      if (row.size() != static_cast<std::size_t>(inst.num_arms)) {
        throw std::invalid_argument(std::string("run_experiment: ") + field +
                                    ": arm count mismatch");
      }
    }
  }
}

// Hypothesis classes for one run: explicit tables when given, otherwise the
// truth plus `decoys` uniform tables from the cell's decoy stream (reward
// class first, then each cost class, one shared stream).
CellOracles cell_oracles(const ProblemInstance& inst, const OracleSpec& spec,
                         std::uint64_t cell_seed) {
  CellOracles out;
  const std::size_t m = static_cast<std::size_t>(inst.num_resources());
  if (!spec.reward_tables.empty()) {
    if (spec.cost_tables.size() != m) {
      throw std::invalid_argument(
          "run_experiment: oracle.cost_tables: one class per resource required");
    }
    check_table_dims(spec.reward_tables, inst, "oracle.reward_tables");
    for (const auto& tables : spec.cost_tables) {
      if (tables.empty()) {
        throw std::invalid_argument(
            "run_experiment: oracle.cost_tables: classes must not be empty");
      }
      check_table_dims(tables, inst, "oracle.cost_tables");
    }
    out.reward = spec.reward_tables;
    out.cost = spec.cost_tables;
    return out;
  }
  Rng decoy_rng(derive_seed(cell_seed, 7919));
  out.reward.push_back(inst.f_star);
  for (int d = 0; d < spec.decoys; ++d) {
    out.reward.push_back(random_table(inst.num_contexts, inst.num_arms, decoy_rng));
  }
  out.cost.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.cost[i].push_back(inst.g_star[i]);
    for (int d = 0; d < spec.decoys; ++d) {
      out.cost[i].push_back(random_table(inst.num_contexts, inst.num_arms, decoy_rng));
    }
  }
  return out;
}

double resolved_u_t(const ExperimentConfig& config) {
  if (config.u_t > 0.0) return config.u_t;
  const std::size_t class_size =
      config.oracle.reward_tables.empty()
          ? static_cast<std::size_t>(1 + config.oracle.decoys)
          : config.oracle.reward_tables.size();
  return std::max(1.0, 8.0 * std::log(static_cast<double>(class_size)));
}

double resolved_shift(const ExperimentConfig& config, double budget, long long horizon) {
  if (config.cost_shift >= 0.0) return config.cost_shift;
  return std::min(budget / static_cast<double>(horizon), 1.0);
}

// One grid cell: oracles from the cell's decoy stream, then the configured
// run mode. The cell seed folds the horizon index into the user seed so no
// two cells share a stream.
RunTrace run_cell(const ProblemInstance& inst, const ExperimentConfig& config,
                  long long horizon, double shift, std::size_t horizon_index,
                  std::uint64_t seed) {
  const std::uint64_t cell_seed =
      derive_seed(seed, static_cast<std::uint64_t>(horizon_index));
  const CellOracles oracles = cell_oracles(inst, config.oracle, cell_seed);
  ControllerConfig controller_config;
  controller_config.reward_oracle = FiniteClassOracle(oracles.reward, config.oracle.eta);
  for (const auto& tables : oracles.cost) {
    controller_config.cost_oracles.push_back(FiniteClassOracle(tables, config.oracle.eta));
  }
  controller_config.phi_kind = config.phi_kind;
  controller_config.phi_param = config.phi_param;
  controller_config.u_t =
      config.u_t > 0.0
          ? config.u_t
          : std::max(1.0, 8.0 * std::log(static_cast<double>(oracles.reward.size())));
  controller_config.cost_shift = shift;
  controller_config.budget = inst.budget;
  if (config.use_hard_stop) {
    return hard_stop_run(inst, controller_config, horizon, inst.budget,
                         config.hard_stop, cell_seed);
  }
  if (config.use_ensemble) {
    return ensemble_run(inst, controller_config, horizon, cell_seed, config.guesses);
  }
  return run(inst, controller_config, horizon, cell_seed);
}

void write_trace_csv(const std::string& path, const RunTrace& trace, std::size_t m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("run_experiment: failed to open " + path);
  out << "# ccbandit-trace-v1\n";
  out << "round,context,action,reward";
  for (std::size_t i = 0; i < m; ++i) out << ",cost_" << i;
  for (std::size_t i = 0; i < m; ++i) out << ",queue_" << i;
  out << ",gamma,lambda,saturated,forced_null\n";
  for (const RoundRecord& rec : trace.rounds) {
    out << rec.round << ',' << rec.context << ',' << rec.action << ','
        << g17(rec.reward);
    for (std::size_t i = 0; i < m; ++i) out << ',' << g17(rec.costs[i]);
    for (std::size_t i = 0; i < m; ++i) out << ',' << g17(rec.queue_after[i]);
    out << ',' << g17(rec.gamma) << ',' << g17(rec.lambda_igw) << ','
        << (rec.phi_saturated ? 1 : 0) << ',' << (rec.forced_null ? 1 : 0) << '\n';
  }
  if (!out.good()) throw std::runtime_error("run_experiment: failed to write " + path);
}

const char* const kMetricNames[] = {"pseudo_regret", "realized_regret", "ccv",
                                    "cost_sum", "queue_final"};
constexpr std::size_t kNumMetrics = 5;

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate_instance(config.instance);
  if (config.horizons.empty()) {
    throw std::invalid_argument("run_experiment: horizons must not be empty");
  }
  for (std::size_t i = 0; i < config.horizons.size(); ++i) {
    if (config.horizons[i] < 1) {
      throw std::invalid_argument("run_experiment: horizons must be at least 1");
    }
    if (i > 0 && config.horizons[i] <= config.horizons[i - 1]) {
      throw std::invalid_argument("run_experiment: horizons must be strictly ascending");
    }
  }
  if (config.seeds.empty()) {
    throw std::invalid_argument("run_experiment: seeds must not be empty");
  }
  if (config.use_hard_stop && config.use_ensemble) {
    throw std::invalid_argument("run_experiment: hard_stop and ensemble cannot be combined");
  }

  std::string root = config.out_dir;
  if (root.empty()) {
    const char* env = std::getenv("CCBANDIT_OUT");
    root = env != nullptr && env[0] != '\0' ? env : ".";
  }
  const std::filesystem::path dir = std::filesystem::path(root) / config.name;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("run_experiment: cannot create " + dir.string() + ": " +
                             ec.message());
  }

  const std::size_t num_horizons = config.horizons.size();
  const std::size_t num_seeds = config.seeds.size();
  const std::size_t m = static_cast<std::size_t>(config.instance.num_resources());
  // finals[metric][horizon][seed]
  std::vector<std::vector<std::vector<double>>> finals(
      kNumMetrics, std::vector<std::vector<double>>(
                       num_horizons, std::vector<double>(num_seeds, 0.0)));
  ExperimentResult result;
  json report;
  report["schema"] = "ccbandit-benchmark-v1";
  report["name"] = config.name;
  report["kind"] = tag_name(config.benchmark);
  json per_horizon = json::array();

  for (std::size_t hi = 0; hi < num_horizons; ++hi) {
    const long long horizon = config.horizons[hi];
    ProblemInstance inst = config.instance;
    inst.budget = budget_for(config.budget_rule, horizon, inst.budget);
    if (!(inst.budget >= 0.0) || !std::isfinite(inst.budget)) {
      throw std::invalid_argument("run_experiment: budget_rule yields a bad budget");
    }
    const StationaryPolicy policy = benchmark_for(inst, config.benchmark, horizon);
    const double shift = resolved_shift(config, inst.budget, horizon);
    const std::vector<double> weights = context_weights(inst, horizon);
    double bench_total = 0.0;
    for (std::size_t x = 0; x < weights.size(); ++x) {
      bench_total += weights[x] * policy.context_values[x];
    }
    json entry;
    entry["horizon"] = horizon;
    entry["budget"] = inst.budget;
    entry["value_per_round"] = bench_total / static_cast<double>(horizon);
    entry["context_values"] = policy.context_values;
    entry["context_costs"] = policy.context_costs;
    entry["policy"] = policy.table;
    per_horizon.push_back(entry);

    for (std::size_t si = 0; si < num_seeds; ++si) {
      const RunTrace trace =
          run_cell(inst, config, horizon, shift, hi, config.seeds[si]);
      const MetricSeries metrics = compute_metrics(trace, policy, inst);
      finals[0][hi][si] = metrics.pseudo_regret.back();
      finals[1][hi][si] = metrics.realized_regret.back();
      finals[2][hi][si] = metrics.ccv.back();
      double cost_final = 0.0;
      double queue_final = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        cost_final = i == 0 ? metrics.cost_sums[i].back()
                            : std::max(cost_final, metrics.cost_sums[i].back());
        queue_final = i == 0 ? metrics.queues[i].back()
                             : std::max(queue_final, metrics.queues[i].back());
      }
      finals[3][hi][si] = cost_final;
      finals[4][hi][si] = queue_final;

      if (config.write_traces) {
        const std::string path =
            (dir / ("trace_T" + std::to_string(horizon) + "_s" +
                    std::to_string(config.seeds[si]) + ".csv"))
                .string();
        write_trace_csv(path, trace, m);
        result.trace_paths.push_back(path);
      }
    }
  }
  report["per_horizon"] = per_horizon;

  std::vector<double> horizon_values(num_horizons);
  for (std::size_t hi = 0; hi < num_horizons; ++hi) {
    horizon_values[hi] = static_cast<double>(config.horizons[hi]);
  }
  for (std::size_t mi = 0; mi < kNumMetrics; ++mi) {
    std::vector<double> means(num_horizons);
    std::vector<double> ses(num_horizons);
    for (std::size_t hi = 0; hi < num_horizons; ++hi) {
      means[hi] = mean_of(finals[mi][hi]);
      ses[hi] = se_of(finals[mi][hi], means[hi]);
    }
    double slope = std::numeric_limits<double>::quiet_NaN();
    try {
      slope = rate_fit(horizon_values, means).slope;
    } catch (const std::invalid_argument&) {
    }
    for (std::size_t hi = 0; hi < num_horizons; ++hi) {
      result.rows.push_back(
          {config.horizons[hi], kMetricNames[mi], means[hi], ses[hi], slope});
    }
  }

  result.aggregate_path = (dir / "aggregate.csv").string();
  {
    std::ofstream out(result.aggregate_path);
    if (!out) {
      throw std::runtime_error("run_experiment: failed to open " + result.aggregate_path);
    }
    out << "# ccbandit-aggregate-v1\n";
    out << "horizon,metric,mean,se,slope\n";
    for (const AggregateRow& row : result.rows) {
      out << row.horizon << ',' << row.metric << ',' << g17(row.mean) << ','
          << g17(row.se) << ',' << g17(row.slope) << '\n';
    }
    if (!out.good()) {
      throw std::runtime_error("run_experiment: failed to write " +
                               result.aggregate_path);
    }
  }
  result.report_path = (dir / "benchmark.json").string();
  {
    std::ofstream out(result.report_path);
    if (!out) {
      throw std::runtime_error("run_experiment: failed to open " + result.report_path);
    }
    out << report.dump(2) << '\n';
    if (!out.good()) {
      throw std::runtime_error("run_experiment: failed to write " + result.report_path);
    }
  }
  return result;
}

DriftRun drift_run(const ExperimentConfig& config, std::size_t horizon_index) {
  validate_instance(config.instance);
  if (horizon_index >= config.horizons.size()) {
    throw std::invalid_argument("drift_run: horizon index out of range");
  }
  if (config.seeds.empty()) {
    throw std::invalid_argument("drift_run: seeds must not be empty");
  }
  const long long horizon = config.horizons[horizon_index];
  DriftRun out;
  out.instance = config.instance;
  out.instance.budget = budget_for(config.budget_rule, horizon, out.instance.budget);
  out.benchmark = benchmark_for(out.instance, config.benchmark, horizon);
  out.u_t = resolved_u_t(config);
  const double shift = resolved_shift(config, out.instance.budget, horizon);
  out.traces.reserve(config.seeds.size());
  for (std::uint64_t seed : config.seeds) {
    out.traces.push_back(
        run_cell(out.instance, config, horizon, shift, horizon_index, seed));
  }
  return out;
}

std::vector<AggregateRow> read_aggregate_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("read_aggregate_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "# ccbandit-aggregate-v1") {
    throw std::invalid_argument("read_aggregate_csv: expected ccbandit-aggregate-v1");
  }
  if (!std::getline(in, line) || line != "horizon,metric,mean,se,slope") {
    throw std::invalid_argument("read_aggregate_csv: bad header");
  }
  std::vector<AggregateRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    AggregateRow row;
    if (!std::getline(ss, field, ',')) break;
    row.horizon = std::stoll(field);
    if (!std::getline(ss, row.metric, ',')) {
      throw std::invalid_argument("read_aggregate_csv: bad row '" + line + "'");
    }
    if (!std::getline(ss, field, ',')) {
      throw std::invalid_argument("read_aggregate_csv: bad row '" + line + "'");
    }
    row.mean = std::strtod(field.c_str(), nullptr);
    if (!std::getline(ss, field, ',')) {
      throw std::invalid_argument("read_aggregate_csv: bad row '" + line + "'");
    }
    row.se = std::strtod(field.c_str(), nullptr);
    if (!std::getline(ss, field, ',')) {
      throw std::invalid_argument("read_aggregate_csv: bad row '" + line + "'");
    }
    row.slope = std::strtod(field.c_str(), nullptr);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ccb
