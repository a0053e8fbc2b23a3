// Command line front end: run experiment configs, solve benchmark policies,
// emit the phased hard instances and their ratio tables, run the backlog
// drift diagnostic, and fit growth rates from aggregate CSVs.
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ccb/harness.hpp"

namespace {

using namespace ccb;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

FeasibilityTag parse_kind(const std::string& name) {
  if (name == "in_expectation") return FeasibilityTag::kInExpectation;
  if (name == "slater") return FeasibilityTag::kSlater;
  if (name == "almost_sure") return FeasibilityTag::kAlmostSure;
  if (name == "long_term") return FeasibilityTag::kLongTerm;
  throw std::invalid_argument("unknown benchmark kind '" + name +
                              "' (expected in_expectation, slater, almost_sure, "
                              "or long_term)");
}

void apply_seed_base(ExperimentConfig& config, std::uint64_t seed_base) {
  for (std::uint64_t& seed : config.seeds) seed += seed_base;
}

void cmd_simulate(const std::string& config_path, std::uint64_t seed_base,
                  const std::string& out_dir) {
  ExperimentConfig config = load_config(config_path);
  apply_seed_base(config, seed_base);
  if (!out_dir.empty()) config.out_dir = out_dir;
  const ExperimentResult result = run_experiment(config);
  std::printf("wrote %s\n", result.aggregate_path.c_str());
  std::printf("wrote %s\n", result.report_path.c_str());
  if (!result.trace_paths.empty()) {
    std::printf("wrote %zu trace files\n", result.trace_paths.size());
  }
  const long long last = config.horizons.back();
  for (const AggregateRow& row : result.rows) {
    if (row.horizon != last) continue;
    std::printf("%-16s T=%lld  mean %-12s se %-12s slope %s\n", row.metric.c_str(),
                row.horizon, fmt(row.mean).c_str(), fmt(row.se).c_str(),
                fmt(row.slope).c_str());
  }
}

void cmd_bench(const std::string& instance_path, const std::string& kind_name,
               long long horizon) {
  const ProblemInstance instance = load_instance(instance_path);
  const FeasibilityTag kind =
      kind_name.empty() ? instance.tag : parse_kind(kind_name);
  const StationaryPolicy policy = benchmark_for(instance, kind, horizon);
  std::printf("kind %s, horizon %lld, budget %s\n", kind_name.empty() ? "(instance tag)"
                  : kind_name.c_str(), horizon, fmt(instance.budget).c_str());
  const std::vector<double> weights = context_weights(instance, horizon);
  double total = 0.0;
  for (std::size_t x = 0; x < policy.context_values.size(); ++x) {
    total += weights[x] * policy.context_values[x];
    std::printf("context %zu: value %-10s cost %-10s policy [", x,
                fmt(policy.context_values[x]).c_str(),
                fmt(policy.context_costs[x]).c_str());
    for (std::size_t a = 0; a < policy.table[x].size(); ++a) {
      std::printf("%s%s", a == 0 ? "" : ", ", fmt(policy.table[x][a]).c_str());
    }
    std::printf("]\n");
  }
  std::printf("value per round %s\n", fmt(total / static_cast<double>(horizon)).c_str());
}

void cmd_lowerbound(long long horizon, long long budget, bool tau_sweep, int peak,
                    const std::string& out_path) {
  if (tau_sweep) {
    const RatioReport report = equalized_ratio_table(horizon, budget);
    std::printf("peak  opt         equalized   ratio\n");
    for (const RatioRow& row : report.rows) {
      std::printf("%-5d %-11s %-11s %s\n", row.peak_phase, fmt(row.opt).c_str(),
                  fmt(row.alg).c_str(), fmt(row.ratio).c_str());
    }
    std::printf("analytic floor H(%zu) = %.9f\n", report.rows.size(),
                report.analytic_floor);
    return;
  }
  const ProblemInstance instance = make_lower_bound_instance(horizon, budget, peak);
  if (out_path.empty()) {
    std::printf("%s\n", instance_to_json(instance).c_str());
  } else {
    save_instance(instance, out_path);
    std::printf("wrote %s\n", out_path.c_str());
  }
}

void cmd_diagnose_drift(const std::string& config_path, std::uint64_t seed_base,
                        std::size_t horizon_index) {
  ExperimentConfig config = load_config(config_path);
  apply_seed_base(config, seed_base);
  const DriftRun replay = drift_run(config, horizon_index);
  const DriftDiagnostic diag = drift_diagnostic(
      replay.traces, replay.benchmark, replay.instance, config.phi_kind, replay.u_t);
  double worst_slack = 0.0;
  double worst_sigma = 0.0;
  std::size_t worst_round = 0;
  bool ok = true;
  for (std::size_t t = 1; t < diag.slack.size(); ++t) {
    const double sigma = diag.slack_se[t] > 0.0 ? diag.slack[t] / diag.slack_se[t] : 0.0;
    if (t == 1 || diag.slack[t] < worst_slack) {
      worst_slack = diag.slack[t];
      worst_sigma = sigma;
      worst_round = t;
    }
    ok = ok && diag.slack[t] >= -3.0 * diag.slack_se[t];
  }
  const std::size_t last = diag.slack.size() - 1;
  std::printf("seeds %zu, horizon %zu, error budget %s\n", replay.traces.size(), last,
              fmt(replay.u_t).c_str());
  std::printf("final: lhs %s, rhs %s, slack %s (se %s)\n", fmt(diag.lhs[last]).c_str(),
              fmt(diag.rhs[last]).c_str(), fmt(diag.slack[last]).c_str(),
              fmt(diag.slack_se[last]).c_str());
  std::printf("tightest slack %s at round %zu (%s standard errors)\n",
              fmt(worst_slack).c_str(), worst_round, fmt(worst_sigma).c_str());
  std::printf("envelope %s\n", ok ? "holds within 3 standard errors"
                                  : "VIOLATED beyond 3 standard errors");
}

void cmd_ratefit(const std::string& csv_path) {
  const std::vector<AggregateRow> rows = read_aggregate_csv(csv_path);
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_metric;
  std::vector<std::string> order;
  for (const AggregateRow& row : rows) {
    if (by_metric.find(row.metric) == by_metric.end()) order.push_back(row.metric);
    by_metric[row.metric].first.push_back(static_cast<double>(row.horizon));
    by_metric[row.metric].second.push_back(row.mean);
  }
  for (const std::string& metric : order) {
    const auto& [horizons, means] = by_metric[metric];
    try {
      const RateFit fit = rate_fit(horizons, means);
      std::printf("%-16s slope %-10s intercept %-10s r2 %-10s points %zu",
                  metric.c_str(), fmt(fit.slope).c_str(), fmt(fit.intercept).c_str(),
                  fmt(fit.r_squared).c_str(), horizons.size() - fit.dropped.size());
      if (!fit.dropped.empty()) std::printf(" (dropped %zu)", fit.dropped.size());
      std::printf("\n");
    } catch (const std::invalid_argument& e) {
      std::printf("%-16s no fit: %s\n", metric.c_str(), e.what());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constrained contextual bandit controller toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string instance_path;
  std::string csv_path;
  std::string kind_name;
  std::string out_path;
  std::uint64_t seed_base = 0;
  long long horizon = 1000;
  long long lb_horizon = 0;
  long long lb_budget = 0;
  bool tau_sweep = false;
  int peak = 1;
  std::size_t horizon_index = 0;

  CLI::App* simulate = app.add_subcommand("simulate", "run an experiment config");
  simulate->add_option("config", config_path, "experiment config JSON")->required();
  simulate->add_option("--seed-base", seed_base, "offset added to every seed");
  simulate->add_option("--out", out_path, "output root directory");

  CLI::App* bench = app.add_subcommand("bench", "solve a benchmark policy");
  bench->add_option("instance", instance_path, "instance JSON")->required();
  bench->add_option("--kind", kind_name,
                    "benchmark definition (in_expectation, slater, almost_sure, "
                    "long_term); default: the instance tag");
  bench->add_option("--horizon", horizon, "occupancy horizon")->check(CLI::PositiveNumber);

  CLI::App* lowerbound =
      app.add_subcommand("lowerbound", "phased hard instances and ratio tables");
  lowerbound->add_option("--T", lb_horizon, "horizon")->required()
      ->check(CLI::PositiveNumber);
  lowerbound->add_option("--B", lb_budget, "budget")->required()
      ->check(CLI::PositiveNumber);
  lowerbound->add_flag("--tau-sweep", tau_sweep,
                       "print the equalized-allocation ratio table over all peaks");
  lowerbound->add_option("--peak", peak, "peak phase of the emitted instance");
  lowerbound->add_option("--out", out_path, "write the instance JSON here");

  CLI::App* diagnose =
      app.add_subcommand("diagnose-drift", "backlog drift envelope diagnostic");
  diagnose->add_option("config", config_path, "experiment config JSON")->required();
  diagnose->add_option("--seed-base", seed_base, "offset added to every seed");
  diagnose->add_option("--horizon-index", horizon_index,
                       "index into the config's horizon grid");

  CLI::App* ratefit_cmd = app.add_subcommand("ratefit", "fit growth rates");
  ratefit_cmd->add_option("aggregate", csv_path, "aggregate CSV")->required();

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) {
      cmd_simulate(config_path, seed_base, out_path);
    } else if (bench->parsed()) {
      cmd_bench(instance_path, kind_name, horizon);
    } else if (lowerbound->parsed()) {
      cmd_lowerbound(lb_horizon, lb_budget, tau_sweep, peak, out_path);
    } else if (diagnose->parsed()) {
      cmd_diagnose_drift(config_path, seed_base, horizon_index);
    } else if (ratefit_cmd->parsed()) {
      cmd_ratefit(csv_path);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
