#pragma once
// Experiment harness: metric extraction from run traces, the backlog-drift
// diagnostic that compares potential-plus-regret growth against its envelope,
// log-log growth-rate fitting, competitive-ratio experiments on the phased
// hard instances, and the Monte Carlo experiment runner with CSV and JSON
// reports.
#include <cstdint>
#include <string>
#include <vector>

#include "ccb/benchmark.hpp"
#include "ccb/controller.hpp"
#include "ccb/envs.hpp"

namespace ccb {

struct MetricSeries {
  std::vector<double> pseudo_regret;   // cumulative, ground-truth means vs benchmark
  std::vector<double> realized_regret; // cumulative, realized rewards vs benchmark
  std::vector<std::vector<double>> cost_sums;  // [resource][round] cumulative raw cost
  std::vector<double> ccv;             // cumulative violation per the benchmark kind
  std::vector<std::vector<double>> queues;     // [resource][round] backlog after round
};

// Per-round metrics for one trace. The benchmark side of both regrets uses the
// policy's stored per-context values; the online side uses the instance's
// ground-truth means (pseudo) or the realized rewards. The violation series is
// the cumulative raw cost for round-wise benchmark kinds and the cumulative
// cost minus the instance budget for the aggregate-budget kind; instances with
// several resources report the worst one. Pure: recomputation is exact.
MetricSeries compute_metrics(const RunTrace& trace, const StationaryPolicy& benchmark,
                             const ProblemInstance& instance);

struct DriftDiagnostic {
  std::vector<double> lhs;       // seed-mean potential gain plus pseudo-regret
  std::vector<double> rhs;       // seed-mean envelope
  std::vector<double> slack;     // rhs - lhs, seed mean
  std::vector<double> slack_se;  // standard error of the per-seed slack
};

// Monte Carlo check that backlog potential plus regret stays inside its
// envelope: for each seed and round t,
//   lhs(t) = Phi(Q(t)) - Phi(0) + pseudo-regret(t)
//   rhs(t) = 4 sqrt(K U t) + sum_{tau<=t} Phi''(Q(tau))
//            + 4 sqrt(K U) sqrt(sum_{tau<t} Phi'(Q(tau))^2)
// with Q(0) = 0, potentials summed over resources, and the square root of the
// weight sum averaged per seed. Entry 0 is the empty prefix (both sides zero).
// Requires at least 30 traces of equal shape and a round-wise in-expectation
// benchmark; the inequality is stated for that benchmark class.
DriftDiagnostic drift_diagnostic(const std::vector<RunTrace>& traces,
                                 const StationaryPolicy& benchmark,
                                 const ProblemInstance& instance, PhiKind kind,
                                 double u_t);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  std::vector<std::size_t> dropped;  // indices whose mean was not positive
};

// Least-squares line through (ln horizon, ln mean). Means at or below zero are
// dropped and reported; surviving means are floored at 1e-9 before the log.
// Needs at least two surviving points.
RateFit rate_fit(const std::vector<double>& horizons, const std::vector<double>& means);

struct RatioRow {
  int peak_phase = 0;
  double opt = 0.0;    // aggregate-budget optimum for this peak
  double alg = 0.0;    // evaluated policy's cumulative reward (mean over seeds)
  double ratio = 0.0;  // opt / max(alg, floor)
};

struct RatioReport {
  std::vector<RatioRow> rows;   // one per peak phase 1..L
  double worst_ratio = 0.0;     // max over rows
  double analytic_floor = 0.0;  // H(L), the equalized allocation's ratio
};

// Expected-value evaluation of the equalized open-loop allocation on the
// phased family: no sampling, so every row's ratio equals H(L).
RatioReport equalized_ratio_table(long long horizon, long long budget);

// Monte Carlo evaluation of the hard-stopped controller on the phased family.
// For each peak the reward oracle holds every peak hypothesis (the profile is
// not known upfront) and the cost oracle is pinned; alg is the mean realized
// cumulative reward over the seeds.
RatioReport competitive_ratio_experiment(long long horizon, long long budget,
                                         PhiKind kind, const HardStopSpec& scaling,
                                         const std::vector<std::uint64_t>& seeds,
                                         double floor = 1e-9);

struct BudgetRule {
  enum class Kind { kNone, kFixed, kSqrt, kFraction };
  Kind kind = Kind::kNone;  // kNone keeps the instance budget at every horizon
  double value = 0.0;       // fixed: B = value; sqrt: B = value * sqrt(T);
                            // fraction: B = value * T
};

double budget_for(const BudgetRule& rule, long long horizon, double fallback);

struct OracleSpec {
  // Explicit hypothesis classes; when empty, each class is the truth table
  // plus `decoys` uniform random tables drawn per run.
  std::vector<Table> reward_tables;
  std::vector<std::vector<Table>> cost_tables;  // [resource][hypothesis]
  int decoys = 7;
  double eta = 0.125;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemInstance instance;
  OracleSpec oracle;
  PhiKind phi_kind = PhiKind::kQuadratic;
  double phi_param = 0.0;    // <= 0 selects the auto parameter
  double u_t = 0.0;          // <= 0 selects max(1, 8 ln |reward class|)
  double cost_shift = -1.0;  // < 0 selects budget / horizon, clamped to [0, 1]
  BudgetRule budget_rule;
  FeasibilityTag benchmark = FeasibilityTag::kInExpectation;
  std::vector<long long> horizons;      // strictly ascending, all >= 1
  std::vector<std::uint64_t> seeds;
  bool use_hard_stop = false;
  HardStopSpec hard_stop;
  bool use_ensemble = false;
  std::vector<double> guesses;  // ensemble only; empty selects the defaults
  bool write_traces = false;
  std::string out_dir;  // empty: $CCBANDIT_OUT if set, else the working dir
};

// Parses the JSON experiment config ("ccbandit-config-v1"); `instance` may be
// an inline instance object or a path string. Violations are rejected with the
// offending field named.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct AggregateRow {
  long long horizon = 0;
  std::string metric;
  double mean = 0.0;
  double se = 0.0;
  double slope = 0.0;  // shared per metric; NaN when no fit is possible
};

struct ExperimentResult {
  std::vector<AggregateRow> rows;
  std::string aggregate_path;
  std::string report_path;
  std::vector<std::string> trace_paths;
};

// Runs the configured (horizon x seed) grid, writes the aggregate CSV
// ("ccbandit-aggregate-v1") and the benchmark report ("ccbandit-benchmark-v1",
// JSON), plus one trace CSV per run when enabled, and returns the aggregate
// rows. Deterministic: a rerun produces byte-identical files.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct DriftRun {
  std::vector<RunTrace> traces;  // one per configured seed
  StationaryPolicy benchmark;
  ProblemInstance instance;  // budget resolved for the chosen horizon
  double u_t = 0.0;          // error budget the controller actually used
};

// Replays the config's cells at one horizon (all seeds, same cell seeds and
// decoy streams as run_experiment) and returns the traces together with the
// pieces drift_diagnostic needs.
DriftRun drift_run(const ExperimentConfig& config, std::size_t horizon_index);

// Reads an aggregate CSV back into rows (used by the rate-fit subcommand).
std::vector<AggregateRow> read_aggregate_csv(const std::string& path);

// Benchmark policy for a config cell. Aggregate-budget benchmarks on
// instances without a NULL arm are solved on a copy with a zero arm appended
// (the program needs a do-nothing column to always be feasible; appending one
// never lowers the optimum, so the regret target only tightens).
StationaryPolicy benchmark_for(const ProblemInstance& instance, FeasibilityTag kind,
                               long long horizon);

}  // namespace ccb
