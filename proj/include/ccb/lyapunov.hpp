#pragma once
// Lyapunov potentials over queue backlogs, and the backlog recursion itself.
//
// Two potential families over x >= 0:
//   Quadratic:    Phi(x) = x^2 / V        (V > 0)
//   Exponential:  Phi(x) = exp(lambda x)  (lambda > 0)
// phi_eval returns value, slope and curvature in one call. The exponential
// family caps its exponent at 500 to avoid overflow; evaluations that hit
// the cap are flagged so long runs can surface the event.
#include <vector>

namespace ccb {

enum class PhiKind { kQuadratic, kExponential };

struct PhiValue {
  double value = 0.0;
  double slope = 0.0;      // Phi'(x)
  double curvature = 0.0;  // Phi''(x)
  bool saturated = false;
};

PhiValue phi_eval(PhiKind kind, double param, double x);

// Horizon-tuned potential parameter.
//   Quadratic:   V = sqrt(K * T * U), budget ignored.
//   Exponential: lambda = 1 / (8 * sqrt(K * U * T) + 2 * budget);
//                pass budget = 0 for the round-wise tuning.
double auto_parameter(PhiKind kind, int num_arms, long long horizon, double u_t,
                      double budget);

struct QueueState {
  std::vector<double> q;  // one backlog per resource, all >= 0
  long long round = 0;
};

// Lindley recursion q <- max(0, q + c), componentwise. Every cost must lie in
// [min_cost, 1]; min_cost is -1 for raw costs and -2 when shifted costs are
// fed (a unit shift can push a cost of -1 down to -2).
void queue_update(QueueState& state, const std::vector<double>& costs,
                  double min_cost = -1.0);

}  // namespace ccb
