// Tests for the benchmark solvers: per-context optimum against brute force,
// the aggregate-budget LP with duality checks, budget scaling bounds, the
// equalized allocation, and the policy dispatcher.
#include "ccb/benchmark.hpp"

#include <cmath>
#include <vector>

#include "ccb/rng.hpp"
#include "testutil.hpp"

using namespace ccb;

namespace {

// Adds a NULL arm as the last arm of every table row.
ProblemInstance with_null_arm(std::vector<std::vector<double>> f,
                              std::vector<std::vector<double>> g, CostChannel channel,
                              std::vector<double> probs) {
  ProblemInstance instance;
  instance.num_contexts = static_cast<int>(f.size());
  for (auto& row : f) row.push_back(0.0);
  for (auto& row : g) row.push_back(0.0);
  instance.num_arms = static_cast<int>(f[0].size());
  instance.null_arm = instance.num_arms - 1;
  instance.f_star = f;
  instance.g_star = {g};
  instance.channels = {channel};
  instance.schedule.kind = ContextSchedule::Kind::kIid;
  instance.schedule.probs = probs;
  validate_instance(instance);
  return instance;
}

double brute_force_optimum(const std::vector<double>& f, const std::vector<double>& g) {
  const int steps = 1000;
  double best = -1e300;
  if (f.size() == 2) {
    for (int i = 0; i <= steps; ++i) {
      const double w = static_cast<double>(i) / steps;
      if (w * g[0] + (1.0 - w) * g[1] <= 0.0) {
        best = std::max(best, w * f[0] + (1.0 - w) * f[1]);
      }
    }
  } else {
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; j <= steps - i; ++j) {
        const double w0 = static_cast<double>(i) / steps;
        const double w1 = static_cast<double>(j) / steps;
        const double w2 = 1.0 - w0 - w1;
        if (w0 * g[0] + w1 * g[1] + w2 * g[2] <= 0.0) {
          best = std::max(best, w0 * f[0] + w1 * f[1] + w2 * f[2]);
        }
      }
    }
  }
  return best;
}

void test_per_context_optimum() {
  PolicyValue slack = per_context_optimum({0.3, 0.9, 0.1}, {-0.1, 0.0, -1.0});
  testutil::check(slack.policy == std::vector<double>({0.0, 1.0, 0.0}),
                  "all costs non-positive picks argmax reward");
  testutil::check_close(slack.value, 0.9, 1e-15, "slack optimum value");

  PolicyValue mix = per_context_optimum({1.0, 0.0}, {0.5, -0.5});
  testutil::check_close(mix.value, 0.5, 1e-12, "boundary mixture value");
  testutil::check_close(mix.policy[0], 0.5, 1e-12, "boundary mixture weight on arm 0");
  testutil::check_close(mix.policy[1], 0.5, 1e-12, "boundary mixture weight on arm 1");

  PolicyValue null_only = per_context_optimum({1.0, 0.0}, {0.5, 0.0});
  testutil::check(null_only.policy == std::vector<double>({0.0, 1.0}),
                  "only the zero-cost arm is feasible");
  testutil::check(null_only.value == 0.0, "zero-cost point mass has value 0");

  testutil::check_throws([] { per_context_optimum({1.0}, {0.5}); },
                         "all-positive costs are infeasible");
  testutil::check_throws([] { per_context_optimum({1.0}, {0.5, -0.5}); },
                         "mismatched rows rejected");

  // Brute-force cross-check on random rows, both supported sizes.
  Rng rng(404);
  for (int trial = 0; trial < 1000; ++trial) {
    const int num_arms = trial < 800 ? 2 : 3;
    std::vector<double> f(num_arms), g(num_arms);
    for (int a = 0; a < num_arms; ++a) {
      f[a] = -1.0 + 2.0 * rng.uniform01();
      g[a] = -1.0 + 2.0 * rng.uniform01();
    }
    g[num_arms - 1] = -rng.uniform01();  // keep the row feasible
    PolicyValue got = per_context_optimum(f, g);
    const double grid = brute_force_optimum(f, g);
    testutil::check(got.value >= grid - 1e-9, "exact solver dominates the grid");
    testutil::check(got.value <= grid + 1e-2, "exact solver within grid resolution");
    double mass = 0.0;
    double cost = 0.0;
    for (int a = 0; a < num_arms; ++a) {
      testutil::check(got.policy[a] >= -1e-12, "policy entries non-negative");
      mass += got.policy[a];
      cost += got.policy[a] * g[a];
    }
    testutil::check(std::fabs(mass - 1.0) <= 1e-12, "policy on the simplex");
    testutil::check(cost <= 1e-12, "policy satisfies the cost constraint");
  }
}

void test_long_term_lp_frozen() {
  // Two contexts with a unit-cost arm each plus a NULL arm, unit counts, B=1:
  // all budget goes to the better context.
  ProblemInstance instance =
      with_null_arm({{0.9}, {0.5}}, {{1.0}, {1.0}}, CostChannel::kBinary, {0.5, 0.5});
  LpSolution lp = long_term_lp(instance, {1.0, 1.0}, 1.0);
  testutil::check_close(lp.value, 0.9, 1e-9, "two-context optimum");
  testutil::check_close(lp.lambda_star, 0.5, 1e-9, "smallest feasible dual value");
  testutil::check_close(lp.dual_value, lp.value, 1e-9, "strong duality at the solution");
  testutil::check_close(lp.policy[0][0], 1.0, 1e-9, "better context takes the arm");
  testutil::check_close(lp.policy[1][1], 1.0, 1e-9, "worse context rests on the NULL arm");

  LpSolution slack_lp = long_term_lp(instance, {1.0, 1.0}, 2.0);
  testutil::check_close(slack_lp.value, 1.4, 1e-9, "non-binding budget takes both arms");
  testutil::check(slack_lp.lambda_star == 0.0, "non-binding budget has zero dual");
  testutil::check_close(slack_lp.dual_value, 1.4, 1e-9, "duality with zero dual variable");

  // Fractional budgets split a tied context.
  LpSolution half = long_term_lp(instance, {1.0, 1.0}, 1.5);
  testutil::check_close(half.value, 0.9 + 0.5 * 0.5, 1e-9, "fractional budget splits ties");
  testutil::check_close(half.policy[1][0], 0.5, 1e-9, "tied context mixes to spend the budget");

  ProblemInstance lower = make_lower_bound_instance(100, 10, 3);
  std::vector<double> counts = context_weights(lower, 100);
  for (double n : counts) testutil::check(n == 10.0, "phase counts are the block length");
  LpSolution lb = long_term_lp(lower, counts, 10.0);
  testutil::check_close(lb.value, 3.0, 1e-9, "hard instance optimum spends at the peak");
  testutil::check_close(lb.policy[2][1], 1.0, 1e-9, "peak phase takes the risky arm");
  testutil::check_close(lb.lambda_star, 0.2, 1e-9, "hard instance dual price");
  testutil::check_close(lb.dual_value, 3.0, 1e-9, "hard instance duality");

  testutil::check_throws([&] { long_term_lp(instance, {1.0}, 1.0); },
                         "count per context enforced");
  testutil::check_throws([&] { long_term_lp(instance, {1.0, 1.0}, -1.0); },
                         "negative budget rejected");
  ProblemInstance no_null = instance;
  no_null.null_arm = -1;
  testutil::check_throws([&] { long_term_lp(no_null, {1.0, 1.0}, 1.0); },
                         "NULL arm required");
}

void test_lp_duality_random() {
  Rng rng(505);
  for (int trial = 0; trial < 60; ++trial) {
    const int num_contexts = 1 + rng.uniform_int(3);
    const int risky_arms = 2 + rng.uniform_int(2);
    std::vector<std::vector<double>> f(num_contexts), g(num_contexts);
    for (int x = 0; x < num_contexts; ++x) {
      for (int a = 0; a < risky_arms; ++a) {
        f[x].push_back(-1.0 + 2.0 * rng.uniform01());
        g[x].push_back(-1.0 + 2.0 * rng.uniform01());
      }
    }
    ProblemInstance instance = with_null_arm(
        f, g, CostChannel::kSigned,
        std::vector<double>(num_contexts, 1.0 / num_contexts));
    std::vector<double> counts;
    for (int x = 0; x < num_contexts; ++x) counts.push_back(1.0 + 9.0 * rng.uniform01());
    const double budget = 5.0 * rng.uniform01();
    LpSolution lp = long_term_lp(instance, counts, budget);

    testutil::check(std::fabs(lp.value - lp.dual_value) <= 1e-6, "strong duality residual");
    testutil::check(lp.lambda_star * budget <= lp.value + 1e-9,
                    "dual price bounded by value over budget");
    double spent = 0.0;
    for (int x = 0; x < num_contexts; ++x) {
      double mass = 0.0;
      for (int a = 0; a < instance.num_arms; ++a) {
        testutil::check(lp.policy[x][a] >= -1e-12, "lp policy non-negative");
        mass += lp.policy[x][a];
        spent += counts[x] * lp.policy[x][a] * instance.g_star[0][x][a];
      }
      testutil::check(std::fabs(mass - 1.0) <= 1e-9, "lp policy rows on the simplex");
    }
    testutil::check(spent <= budget + 1e-9, "lp policy respects the budget");

    // Weak duality against random feasible policies, shrunk toward NULL when
    // they overspend.
    for (int probe = 0; probe < 100; ++probe) {
      double value = 0.0;
      double cons = 0.0;
      std::vector<std::vector<double>> pi(num_contexts);
      for (int x = 0; x < num_contexts; ++x) {
        double total = 0.0;
        for (int a = 0; a < instance.num_arms; ++a) {
          const double w = -std::log(1.0 - rng.uniform01());
          pi[x].push_back(w);
          total += w;
        }
        for (double& w : pi[x]) w /= total;
        for (int a = 0; a < instance.num_arms; ++a) {
          value += counts[x] * pi[x][a] * instance.f_star[x][a];
          cons += counts[x] * pi[x][a] * instance.g_star[0][x][a];
        }
      }
      if (cons > budget) {
        const double shrink = budget / cons;
        value *= shrink;
      }
      testutil::check(value <= lp.dual_value + 1e-9, "weak duality against feasible policies");
      testutil::check(value <= lp.value + 1e-9, "primal optimality against feasible policies");
    }
  }
}

void test_budget_scaling() {
  ProblemInstance instance =
      with_null_arm({{0.9}, {0.5}}, {{1.0}, {1.0}}, CostChannel::kBinary, {0.5, 0.5});
  LpSolution reduced = long_term_lp(instance, {1.0, 1.0}, 1.0);

  testutil::check_close(budget_scaling_bound(reduced, 1.0, 1.0, ScalingMode::kMultiplicative),
                        reduced.value, 1e-12, "no scaling in multiplicative mode");
  testutil::check_close(budget_scaling_bound(reduced, 1.0, 1.0, ScalingMode::kAdditive),
                        reduced.value, 1e-12, "no scaling in additive mode");
  testutil::check_close(budget_scaling_bound(reduced, 2.0, 1.0, ScalingMode::kAdditive), 1.4,
                        1e-9, "additive bound matches the marginal context");
  testutil::check_close(budget_scaling_bound(reduced, 2.0, 1.0, ScalingMode::kMultiplicative),
                        1.8, 1e-9, "multiplicative bound doubles the value");

  testutil::check_throws(
      [&] { budget_scaling_bound(reduced, 2.0, 0.0, ScalingMode::kMultiplicative); },
      "zero reduced budget rejected");
  testutil::check_throws(
      [&] { budget_scaling_bound(reduced, 0.5, 1.0, ScalingMode::kAdditive); },
      "shrinking budgets rejected");

  // Both modes certify upper bounds on the LP at the larger budget.
  Rng rng(606);
  for (int trial = 0; trial < 100; ++trial) {
    const int num_contexts = 1 + rng.uniform_int(3);
    std::vector<std::vector<double>> f(num_contexts), g(num_contexts);
    for (int x = 0; x < num_contexts; ++x) {
      for (int a = 0; a < 3; ++a) {
        f[x].push_back(rng.uniform01());
        g[x].push_back(rng.uniform01());
      }
    }
    ProblemInstance random_instance = with_null_arm(
        f, g, CostChannel::kBinary, std::vector<double>(num_contexts, 1.0 / num_contexts));
    std::vector<double> counts;
    for (int x = 0; x < num_contexts; ++x) counts.push_back(1.0 + 9.0 * rng.uniform01());
    const double reduced_budget = 0.1 + 2.0 * rng.uniform01();
    const double budget = reduced_budget * (1.0 + rng.uniform01());
    LpSolution at_reduced = long_term_lp(random_instance, counts, reduced_budget);
    LpSolution at_full = long_term_lp(random_instance, counts, budget);
    testutil::check(
        budget_scaling_bound(at_reduced, budget, reduced_budget, ScalingMode::kMultiplicative) >=
            at_full.value - 1e-9,
        "multiplicative bound dominates the larger-budget optimum");
    testutil::check(
        budget_scaling_bound(at_reduced, budget, reduced_budget, ScalingMode::kAdditive) >=
            at_full.value - 1e-9,
        "additive bound dominates the larger-budget optimum");
  }
}

void test_equalized_allocation() {
  EqualizedAllocation one = equalized_allocation(1);
  testutil::check(one.alpha == std::vector<double>({1.0}) && one.ratio == 1.0,
                  "single phase takes the whole budget");

  EqualizedAllocation four = equalized_allocation(4);
  testutil::check_close(four.ratio, 25.0 / 12.0, 1e-12, "harmonic ratio at four phases");
  EqualizedAllocation eight = equalized_allocation(8);
  testutil::check_close(eight.ratio, 761.0 / 280.0, 1e-12, "harmonic ratio at eight phases");

  for (int L : {1, 2, 4, 8, 13}) {
    EqualizedAllocation alloc = equalized_allocation(L);
    double mass = 0.0;
    for (double a : alloc.alpha) mass += a;
    testutil::check(std::fabs(mass - 1.0) <= 1e-12, "allocation spends the unit budget");
    for (int l = 2; l <= L; ++l) {
      testutil::check_close(alloc.alpha[l - 1], alloc.alpha[0] / l, 1e-15,
                            "shares fall off harmonically");
    }
    // The worst case over the unknown peak phase is equalized at H(L).
    double worst = 0.0;
    for (int tau = 1; tau <= L; ++tau) {
      double covered = 0.0;
      for (int l = 1; l <= tau; ++l) covered += l * alloc.alpha[l - 1];
      worst = std::max(worst, tau / covered);
    }
    testutil::check(std::fabs(worst - alloc.ratio) <= 1e-12,
                    "direct worst case equals the harmonic ratio");
  }
  testutil::check_throws([] { equalized_allocation(0); }, "empty allocation rejected");
}

void test_context_weights() {
  ProblemInstance instance =
      with_null_arm({{0.5}, {0.2}}, {{0.1}, {0.3}}, CostChannel::kBinary, {0.25, 0.75});
  std::vector<double> iid = context_weights(instance, 100);
  testutil::check_close(iid[0], 25.0, 1e-12, "iid weights scale the probabilities");
  testutil::check_close(iid[1], 75.0, 1e-12, "iid weights scale the probabilities");

  instance.schedule.kind = ContextSchedule::Kind::kScripted;
  instance.schedule.sequence = {0, 1, 1};
  testutil::check(context_weights(instance, 3) == std::vector<double>({1.0, 2.0}),
                  "scripted weights count the script");
  testutil::check_throws([&] { context_weights(instance, 4); },
                         "script shorter than horizon rejected");

  instance.schedule.kind = ContextSchedule::Kind::kPhased;
  instance.schedule.block = 10;
  instance.schedule.phase_contexts = {0, 1};
  testutil::check(context_weights(instance, 25) == std::vector<double>({10.0, 15.0}),
                  "phased weights clamp to the last phase");

  instance.schedule.kind = ContextSchedule::Kind::kCallback;
  instance.schedule.callback = [](long long t) { return static_cast<int>(t % 2); };
  testutil::check(context_weights(instance, 5) == std::vector<double>({3.0, 2.0}),
                  "callback weights consult the hook");
}

void test_benchmark_policy() {
  // One context whose best arm is surely cheap: every kind picks it.
  ProblemInstance coincide;
  coincide.num_contexts = 1;
  coincide.num_arms = 3;
  coincide.null_arm = 2;
  coincide.f_star = {{0.9, 0.2, 0.0}};
  coincide.g_star = {{{-1.0, 0.5, 0.0}}};
  coincide.channels = {CostChannel::kSigned};
  coincide.schedule.probs = {1.0};
  coincide.budget = 0.0;
  coincide.slater_margin = 0.5;
  validate_instance(coincide);
  for (FeasibilityTag kind :
       {FeasibilityTag::kInExpectation, FeasibilityTag::kSlater, FeasibilityTag::kAlmostSure,
        FeasibilityTag::kLongTerm}) {
    StationaryPolicy policy = benchmark_policy(coincide, kind, 100);
    testutil::check_close(policy.table[0][0], 1.0, 1e-9,
                          "all kinds coincide on a surely cheap best arm");
    testutil::check_close(policy.context_values[0], 0.9, 1e-9, "coincident value");
  }

  // Slater certificates hold with the planted margin.
  Rng slater_rng(909);
  std::vector<std::vector<double>> sf(4), sg(4);
  for (int x = 0; x < 4; ++x) {
    for (int a = 0; a < 4; ++a) {
      sf[x].push_back(-1.0 + 2.0 * slater_rng.uniform01());
      sg[x].push_back(-1.0 + 2.0 * slater_rng.uniform01());
    }
  }
  ProblemInstance slater_base =
      with_null_arm(sf, sg, CostChannel::kSigned, {0.25, 0.25, 0.25, 0.25});
  ProblemInstance slater = make_slater_instance(slater_base, 0.3);
  StationaryPolicy slater_policy = benchmark_policy(slater, FeasibilityTag::kSlater, 100);
  for (int x = 0; x < 4; ++x) {
    testutil::check(slater_policy.context_costs[x] <= -0.3 + 1e-9,
                    "slater policy meets the margin per context");
  }

  // Almost-sure policies stay inside the surely safe arm set.
  ProblemInstance safety;
  safety.num_contexts = 2;
  safety.num_arms = 4;
  safety.null_arm = 3;
  safety.f_star = {{0.9, 0.4, 0.1, 0.0}, {0.8, 0.2, 0.6, 0.0}};
  safety.g_star = {{{0.5, 0.0, 0.0, 0.0}, {0.3, 0.0, 0.0, 0.0}}};
  safety.channels = {CostChannel::kBinary};
  safety.schedule.probs = {0.5, 0.5};
  validate_instance(safety);
  StationaryPolicy safe_policy = benchmark_policy(safety, FeasibilityTag::kAlmostSure, 100);
  testutil::check(safe_policy.table[0][1] == 1.0, "first context picks the best safe arm");
  testutil::check(safe_policy.table[1][2] == 1.0, "second context picks the best safe arm");
  testutil::check(safe_policy.table[0][0] == 0.0 && safe_policy.table[1][0] == 0.0,
                  "risky arms excluded from almost-sure support");

  // Infeasible kinds are rejected.
  ProblemInstance hot;
  hot.num_contexts = 1;
  hot.num_arms = 2;
  hot.f_star = {{0.9, 0.1}};
  hot.g_star = {{{0.5, 0.25}}};
  hot.channels = {CostChannel::kBinary};
  hot.schedule.probs = {1.0};
  validate_instance(hot);
  testutil::check_throws([&] { benchmark_policy(hot, FeasibilityTag::kInExpectation, 10); },
                         "all-positive costs violate the in-expectation definition");
  testutil::check_throws([&] { benchmark_policy(hot, FeasibilityTag::kAlmostSure, 10); },
                         "no surely safe arm violates the almost-sure definition");
  testutil::check_throws([&] { benchmark_policy(hot, FeasibilityTag::kLongTerm, 10); },
                         "missing NULL arm violates the long-term definition");
  testutil::check_throws([&] { benchmark_policy(hot, FeasibilityTag::kSlater, 10); },
                         "missing margin violates the slater definition");

  // Ordering sanity: almost-sure <= in-expectation <= long-term with B >= 0.
  Rng rng(808);
  const long long horizon = 50;
  for (int trial = 0; trial < 20; ++trial) {
    const int num_contexts = 1 + rng.uniform_int(2);
    std::vector<std::vector<double>> f(num_contexts), g(num_contexts);
    for (int x = 0; x < num_contexts; ++x) {
      for (int a = 0; a < 3; ++a) {
        f[x].push_back(-1.0 + 2.0 * rng.uniform01());
        g[x].push_back(-1.0 + 2.0 * rng.uniform01());
      }
    }
    ProblemInstance instance = with_null_arm(
        f, g, CostChannel::kSigned, std::vector<double>(num_contexts, 1.0 / num_contexts));
    instance.budget = 3.0 * rng.uniform01();
    std::vector<double> weights = context_weights(instance, horizon);
    StationaryPolicy almost = benchmark_policy(instance, FeasibilityTag::kAlmostSure, horizon);
    StationaryPolicy in_exp = benchmark_policy(instance, FeasibilityTag::kInExpectation, horizon);
    LpSolution lp = long_term_lp(instance, weights, instance.budget);
    double almost_total = 0.0;
    double in_exp_total = 0.0;
    for (int x = 0; x < num_contexts; ++x) {
      almost_total += weights[x] * almost.context_values[x];
      in_exp_total += weights[x] * in_exp.context_values[x];
    }
    testutil::check(almost_total <= in_exp_total + 1e-9,
                    "almost-sure value below in-expectation value");
    testutil::check(in_exp_total <= lp.value + 1e-9,
                    "in-expectation value below the budgeted optimum");
  }
}

void test_quadratic_root() {
  testutil::check_close(quadratic_root(0.0, 4.0), 2.0, 1e-12, "pure square root case");
  testutil::check_close(quadratic_root(3.0, 0.0), 3.0, 1e-12, "pure linear case");
  Rng rng(707);
  for (int trial = 0; trial < 10000; ++trial) {
    const double a = 5.0 * rng.uniform01();
    const double b = 5.0 * rng.uniform01();
    const double x = quadratic_root(a, b);
    testutil::check(std::fabs(x * x - (a * x + b)) <= 1e-9 * std::max(1.0, x * x),
                    "root solves the fixed point");
    testutil::check(x <= a + std::sqrt(b) + 1e-12, "root below the split bound");
  }
  testutil::check_throws([] { quadratic_root(-1.0, 1.0); }, "negative coefficient rejected");
}

}  // namespace

int main() {
  test_per_context_optimum();
  test_long_term_lp_frozen();
  test_lp_duality_random();
  test_budget_scaling();
  test_equalized_allocation();
  test_context_weights();
  test_benchmark_policy();
  test_quadratic_root();
  return testutil::done("test_benchmark");
}
