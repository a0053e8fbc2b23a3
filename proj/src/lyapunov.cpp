#include "ccb/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccb {

PhiValue phi_eval(PhiKind kind, double param, double x) {
  if (!(param > 0.0)) throw std::invalid_argument("phi_eval: parameter must be > 0");
  if (!std::isfinite(x)) throw std::invalid_argument("phi_eval: x must be finite");

  PhiValue out;
  if (kind == PhiKind::kQuadratic) {
    out.value = x * x / param;
    out.slope = 2.0 * x / param;
    out.curvature = 2.0 / param;
    return out;
  }
  double e = param * x;
  if (e > 500.0) {
    e = 500.0;
    out.saturated = true;
  }
  out.value = std::exp(e);
  out.slope = param * out.value;
  out.curvature = param * param * out.value;
  return out;
}

double auto_parameter(PhiKind kind, int num_arms, long long horizon, double u_t,
                      double budget) {
  if (num_arms < 2) throw std::invalid_argument("auto_parameter: need at least two arms");
  if (horizon < 1) throw std::invalid_argument("auto_parameter: horizon must be >= 1");
  if (!(u_t > 0.0)) throw std::invalid_argument("auto_parameter: u_t must be > 0");
  if (!(budget >= 0.0)) throw std::invalid_argument("auto_parameter: budget must be >= 0");

  const double kut = static_cast<double>(num_arms) * u_t * static_cast<double>(horizon);
  if (kind == PhiKind::kQuadratic) return std::sqrt(kut);
  return 1.0 / (8.0 * std::sqrt(kut) + 2.0 * budget);
}

void queue_update(QueueState& state, const std::vector<double>& costs, double min_cost) {
  if (costs.size() != state.q.size()) {
    throw std::invalid_argument("queue_update: cost dimension mismatch");
  }
  for (double c : costs) {
    if (!(c >= min_cost - 1e-12 && c <= 1.0 + 1e-12)) {
      throw std::invalid_argument("queue_update: cost outside admissible range");
    }
  }
  for (std::size_t i = 0; i < costs.size(); ++i) {
    state.q[i] = std::max(0.0, state.q[i] + costs[i]);
  }
  ++state.round;
}

}  // namespace ccb
