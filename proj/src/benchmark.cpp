// Benchmark solvers: per-context optimum, aggregate-budget LP with dual,
// budget scaling bounds, equalized allocation, and the policy dispatcher.
#include "ccb/benchmark.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ccb {
namespace {

constexpr double kTieTol = 1e-9;

void check_finite_row(const std::vector<double>& row, const char* who) {
  for (double v : row) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(who) + ": non-finite entry");
  }
}

// One Lagrangian sweep at a fixed dual value: every context picks among the
// arms whose margin f - lambda g is within `tol` of the context maximum, and
// reports both the least-consuming and the most-consuming choice.
struct Sweep {
  double value = 0.0;        // from the least-consuming picks
  double consumption = 0.0;  // from the least-consuming picks
  std::vector<int> lo;       // least-consuming candidate per context
  std::vector<int> hi;       // most-consuming candidate per context
};

Sweep lagrangian_sweep(const std::vector<std::vector<double>>& f,
                       const std::vector<std::vector<double>>& g,
                       const std::vector<double>& counts, double lambda, double tol) {
  const std::size_t contexts = f.size();
  Sweep sweep;
  sweep.lo.resize(contexts);
  sweep.hi.resize(contexts);
  for (std::size_t x = 0; x < contexts; ++x) {
    const std::size_t arms = f[x].size();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < arms; ++a) best = std::max(best, f[x][a] - lambda * g[x][a]);
    int lo = -1;
    int hi = -1;
    for (std::size_t a = 0; a < arms; ++a) {
      if (f[x][a] - lambda * g[x][a] < best - tol) continue;
      const int arm = static_cast<int>(a);
      if (lo < 0 || g[x][a] < g[x][lo] || (g[x][a] == g[x][lo] && f[x][a] > f[x][lo])) lo = arm;
      if (hi < 0 || g[x][a] > g[x][hi] || (g[x][a] == g[x][hi] && f[x][a] > f[x][hi])) hi = arm;
    }
    sweep.lo[x] = lo;
    sweep.hi[x] = hi;
    sweep.value += counts[x] * f[x][lo];
    sweep.consumption += counts[x] * g[x][lo];
  }
  return sweep;
}

}  // namespace

PolicyValue per_context_optimum(const std::vector<double>& f_row,
                                const std::vector<double>& g_row) {
  if (f_row.empty() || f_row.size() != g_row.size()) {
    throw std::invalid_argument("per_context_optimum: rows must be non-empty and equally sized");
  }
  check_finite_row(f_row, "per_context_optimum");
  check_finite_row(g_row, "per_context_optimum");
  const int num_arms = static_cast<int>(f_row.size());
  PolicyValue best;
  best.value = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < num_arms; ++a) {
    if (g_row[a] <= 0.0 && f_row[a] > best.value) {
      best.value = f_row[a];
      best.policy.assign(f_row.size(), 0.0);
      best.policy[a] = 1.0;
    }
  }
  for (int a = 0; a < num_arms; ++a) {
    if (!(g_row[a] < 0.0)) continue;
    for (int b = 0; b < num_arms; ++b) {
      if (!(g_row[b] > 0.0)) continue;
      const double w = g_row[b] / (g_row[b] - g_row[a]);
      const double value = w * f_row[a] + (1.0 - w) * f_row[b];
      if (value > best.value) {
        best.value = value;
        best.policy.assign(f_row.size(), 0.0);
        best.policy[a] = w;
        best.policy[b] = 1.0 - w;
      }
    }
  }
  if (best.policy.empty()) {
    throw std::invalid_argument("per_context_optimum: no arm with non-positive expected cost");
  }
  return best;
}

LpSolution long_term_lp(const ProblemInstance& instance,
                        const std::vector<double>& context_counts, double budget) {
  validate_instance(instance);
  if (instance.num_resources() != 1) {
    throw std::invalid_argument("long_term_lp: exactly one resource is supported");
  }
  if (instance.null_arm < 0) {
    throw std::invalid_argument("long_term_lp: instance needs a NULL arm");
  }
  if (context_counts.size() != static_cast<std::size_t>(instance.num_contexts)) {
    throw std::invalid_argument("long_term_lp: one count per context required");
  }
  for (double n : context_counts) {
    if (!std::isfinite(n) || n < 0.0) {
      throw std::invalid_argument("long_term_lp: counts must be finite and non-negative");
    }
  }
  if (!std::isfinite(budget) || budget < 0.0) {
    throw std::invalid_argument("long_term_lp: budget must be finite and non-negative");
  }
  const auto& f = instance.f_star;
  const auto& g = instance.g_star[0];

  double lambda = 0.0;
  if (lagrangian_sweep(f, g, context_counts, 0.0, 0.0).consumption > budget) {
    double hi = 0.0;
    for (int x = 0; x < instance.num_contexts; ++x) {
      for (int a = 0; a < instance.num_arms; ++a) {
        if (g[x][a] > 0.0) hi = std::max(hi, f[x][a] / g[x][a]);
      }
    }
    hi += 1.0;
    double lo = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (lagrangian_sweep(f, g, context_counts, mid, 0.0).consumption <= budget) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    lambda = hi;
  }

  Sweep sweep = lagrangian_sweep(f, g, context_counts, lambda, kTieTol);
  LpSolution solution;
  solution.lambda_star = lambda;
  solution.value = sweep.value;
  solution.policy.assign(static_cast<std::size_t>(instance.num_contexts),
                         std::vector<double>(static_cast<std::size_t>(instance.num_arms), 0.0));
  for (int x = 0; x < instance.num_contexts; ++x) {
    solution.policy[x][sweep.lo[x]] = 1.0;
  }
  double remainder = budget - sweep.consumption;
  for (int x = 0; x < instance.num_contexts; ++x) {
    if (remainder <= 0.0) break;
    const int lo = sweep.lo[x];
    const int hi = sweep.hi[x];
    if (!(g[x][hi] > g[x][lo] + kTieTol)) continue;
    const double cap = context_counts[x] * (g[x][hi] - g[x][lo]);
    const double take = std::min(cap, remainder);
    const double share = take / cap;
    solution.value += share * context_counts[x] * (f[x][hi] - f[x][lo]);
    solution.policy[x][lo] = 1.0 - share;
    solution.policy[x][hi] += share;
    remainder -= take;
  }
  solution.mu.resize(static_cast<std::size_t>(instance.num_contexts));
  solution.dual_value = lambda * budget;
  for (int x = 0; x < instance.num_contexts; ++x) {
    double best = 0.0;
    for (int a = 0; a < instance.num_arms; ++a) {
      best = std::max(best, f[x][a] - lambda * g[x][a]);
    }
    solution.mu[x] = context_counts[x] * best;
    solution.dual_value += solution.mu[x];
  }
  return solution;
}

double budget_scaling_bound(const LpSolution& lp_at_reduced, double budget,
                            double reduced_budget, ScalingMode mode) {
  if (!(reduced_budget > 0.0)) {
    throw std::invalid_argument("budget_scaling_bound: reduced budget must be positive");
  }
  if (!(budget >= reduced_budget)) {
    throw std::invalid_argument("budget_scaling_bound: budget must be at least the reduced budget");
  }
  if (mode == ScalingMode::kMultiplicative) {
    return (budget / reduced_budget) * lp_at_reduced.value;
  }
  return lp_at_reduced.value + lp_at_reduced.lambda_star * (budget - reduced_budget);
}

EqualizedAllocation equalized_allocation(int L) {
  if (L < 1) throw std::invalid_argument("equalized_allocation: L must be at least 1");
  EqualizedAllocation out;
  double harmonic = 0.0;
  for (int l = 1; l <= L; ++l) harmonic += 1.0 / l;
  out.ratio = harmonic;
  out.alpha.resize(static_cast<std::size_t>(L));
  for (int l = 1; l <= L; ++l) {
    out.alpha[static_cast<std::size_t>(l - 1)] = 1.0 / (l * harmonic);
  }
  return out;
}

std::vector<double> context_weights(const ProblemInstance& instance, long long horizon) {
  if (horizon < 0) throw std::invalid_argument("context_weights: horizon must be non-negative");
  std::vector<double> weights(static_cast<std::size_t>(instance.num_contexts), 0.0);
  const ContextSchedule& schedule = instance.schedule;
  switch (schedule.kind) {
    case ContextSchedule::Kind::kIid: {
      for (int x = 0; x < instance.num_contexts; ++x) {
        weights[x] = static_cast<double>(horizon) * schedule.probs[x];
      }
      return weights;
    }
    case ContextSchedule::Kind::kScripted: {
      if (horizon > static_cast<long long>(schedule.sequence.size())) {
        throw std::invalid_argument("context_weights: scripted schedule shorter than the horizon");
      }
      for (long long t = 0; t < horizon; ++t) {
        weights[static_cast<std::size_t>(schedule.sequence[static_cast<std::size_t>(t)])] += 1.0;
      }
      return weights;
    }
    case ContextSchedule::Kind::kPhased: {
      const long long phases = static_cast<long long>(schedule.phase_contexts.size());
      for (long long t = 0; t < horizon; ++t) {
        const long long phase = std::min(t / schedule.block, phases - 1);
        weights[static_cast<std::size_t>(schedule.phase_contexts[static_cast<std::size_t>(phase)])] += 1.0;
      }
      return weights;
    }
    case ContextSchedule::Kind::kCallback: {
      if (!schedule.callback) {
        throw std::invalid_argument("context_weights: callback schedule needs a callable");
      }
      for (long long t = 0; t < horizon; ++t) {
        const int context = schedule.callback(t);
        if (context < 0 || context >= instance.num_contexts) {
          throw std::invalid_argument("context_weights: callback returned an unknown context");
        }
        weights[static_cast<std::size_t>(context)] += 1.0;
      }
      return weights;
    }
  }
  throw std::logic_error("context_weights: unreachable");
}

StationaryPolicy benchmark_policy(const ProblemInstance& instance, FeasibilityTag kind,
                                  long long horizon) {
  validate_instance(instance);
  if (instance.num_resources() != 1) {
    throw std::invalid_argument("benchmark_policy: exactly one resource is supported");
  }
  const auto& f = instance.f_star;
  const auto& g = instance.g_star[0];
  StationaryPolicy policy;
  policy.kind = kind;
  policy.table.resize(static_cast<std::size_t>(instance.num_contexts));
  switch (kind) {
    case FeasibilityTag::kInExpectation: {
      for (int x = 0; x < instance.num_contexts; ++x) {
        try {
          policy.table[x] = per_context_optimum(f[x], g[x]).policy;
        } catch (const std::invalid_argument&) {
          throw std::invalid_argument(
              "benchmark_policy: context cannot make the expected cost non-positive "
              "(in-expectation feasibility violated)");
        }
      }
      break;
    }
    case FeasibilityTag::kSlater: {
      const double margin = instance.slater_margin;
      if (!(margin > 0.0 && margin < 1.0)) {
        throw std::invalid_argument(
            "benchmark_policy: instance carries no slater margin in (0, 1) "
            "(slater feasibility violated)");
      }
      for (int x = 0; x < instance.num_contexts; ++x) {
        std::vector<double> shifted = g[x];
        for (double& v : shifted) v += margin;
        try {
          policy.table[x] = per_context_optimum(f[x], shifted).policy;
        } catch (const std::invalid_argument&) {
          throw std::invalid_argument(
              "benchmark_policy: context cannot keep the expected cost at or below "
              "the negative slater margin (slater feasibility violated)");
        }
      }
      break;
    }
    case FeasibilityTag::kAlmostSure: {
      for (int x = 0; x < instance.num_contexts; ++x) {
        const std::vector<int> safe = surely_safe_arms(instance, x);
        if (safe.empty()) {
          throw std::invalid_argument(
              "benchmark_policy: context has no arm with surely non-positive cost "
              "(almost-sure feasibility violated)");
        }
        int best = safe[0];
        for (int a : safe) {
          if (f[x][a] > f[x][best]) best = a;
        }
        policy.table[x].assign(static_cast<std::size_t>(instance.num_arms), 0.0);
        policy.table[x][static_cast<std::size_t>(best)] = 1.0;
      }
      break;
    }
    case FeasibilityTag::kLongTerm: {
      if (instance.null_arm < 0) {
        throw std::invalid_argument(
            "benchmark_policy: aggregate-budget benchmark needs a NULL arm "
            "(long-term feasibility violated)");
      }
      LpSolution lp = long_term_lp(instance, context_weights(instance, horizon),
                                   instance.budget);
      policy.table = lp.policy;
      break;
    }
  }
  policy.context_values.resize(static_cast<std::size_t>(instance.num_contexts));
  policy.context_costs.resize(static_cast<std::size_t>(instance.num_contexts));
  for (int x = 0; x < instance.num_contexts; ++x) {
    double value = 0.0;
    double cost = 0.0;
    for (int a = 0; a < instance.num_arms; ++a) {
      value += policy.table[x][a] * f[x][a];
      cost += policy.table[x][a] * g[x][a];
    }
    policy.context_values[x] = value;
    policy.context_costs[x] = cost;
  }
  return policy;
}

double quadratic_root(double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::invalid_argument("quadratic_root: coefficients must be finite and non-negative");
  }
  return 0.5 * (a + std::sqrt(a * a + 4.0 * b));
}

}  // namespace ccb
