#pragma once
// Offline benchmark solvers for constrained contextual bandit instances:
// per-context optimal policies under a round-wise expected-cost constraint,
// the aggregate-budget linear program and its dual, budget scaling bounds,
// and the equalized allocation used by the hard lower-bound instances.
//
// All solvers handle exactly one resource.
#include <vector>

#include "ccb/envs.hpp"

namespace ccb {

struct PolicyValue {
  std::vector<double> policy;  // simplex over arms
  double value = 0.0;          // <f, policy>
};

// Maximizes <f, pi> over the simplex subject to <g, pi> <= 0. The optimum is
// supported on at most two arms: candidates are every single arm with g <= 0
// and every pair (a, b) with g[a] < 0 < g[b] mixed so that <g, pi> = 0.
// Throws when no arm has g <= 0.
PolicyValue per_context_optimum(const std::vector<double>& f_row,
                                const std::vector<double>& g_row);

struct LpSolution {
  double value = 0.0;                       // primal optimum
  std::vector<std::vector<double>> policy;  // [context][arm], rows on the simplex
  double lambda_star = 0.0;                 // budget dual variable
  std::vector<double> mu;                   // per-context duals, count-weighted
  double dual_value = 0.0;                  // lambda_star * budget + sum(mu)
};

// Solves max sum_x N(x) <f(x), pi(x)> subject to sum_x N(x) <g(x), pi(x)> <= B
// over per-context simplex rows, by bisection on the budget dual: for fixed
// lambda each context picks an argmax of N(x) (f - lambda g), and at the
// critical lambda consumption is split across tied contexts to hit B exactly.
// Requires a NULL arm (which also guarantees feasibility) and one resource.
LpSolution long_term_lp(const ProblemInstance& instance,
                        const std::vector<double>& context_counts, double budget);

enum class ScalingMode { kMultiplicative, kAdditive };

// Certified upper bound on the LP optimum at `budget`, from a solution at the
// smaller `reduced_budget`: multiplicative mode scales by budget / reduced,
// additive mode adds lambda_star * (budget - reduced). reduced_budget must be
// positive and at most budget.
double budget_scaling_bound(const LpSolution& lp_at_reduced, double budget,
                            double reduced_budget, ScalingMode mode);

struct EqualizedAllocation {
  std::vector<double> alpha;  // per-phase budget share, proportional to 1/l
  double ratio = 0.0;         // worst-case competitive ratio, the harmonic sum H(L)
};

// Budget split over L phases with alpha_l proportional to 1/l, which equalizes
// the competitive ratio across the unknown peak phase at H(L).
EqualizedAllocation equalized_allocation(int L);

// Expected or realized context occupancy over the first `horizon` rounds.
// IID schedules use horizon * probs; the other kinds count rounds.
std::vector<double> context_weights(const ProblemInstance& instance, long long horizon);

struct StationaryPolicy {
  FeasibilityTag kind = FeasibilityTag::kInExpectation;
  std::vector<std::vector<double>> table;  // [context][arm], rows on the simplex
  std::vector<double> context_values;      // <f_star(x), pi(x)>
  std::vector<double> context_costs;       // <g_star(x), pi(x)>
};

// Best stationary policy for the given feasibility kind. The aggregate-budget
// kind uses the instance budget and the occupancy over `horizon`; the other
// kinds ignore `horizon`. Throws when the instance cannot satisfy the kind's
// feasibility definition.
StationaryPolicy benchmark_policy(const ProblemInstance& instance, FeasibilityTag kind,
                                  long long horizon);

// Positive solution of x^2 = a x + b for a, b >= 0; it never exceeds a + sqrt(b).
double quadratic_root(double a, double b);

}  // namespace ccb
