#include "ccb/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ccb/rng.hpp"
#include "testutil.hpp"

using namespace ccb;
using testutil::check;
using testutil::check_close;
using testutil::check_throws;

int main() {
  // Frozen potential evaluations.
  {
    PhiValue p = phi_eval(PhiKind::kQuadratic, 4.0, 2.0);
    check_close(p.value, 1.0, 1e-15, "quad value");
    check_close(p.slope, 1.0, 1e-15, "quad slope");
    check_close(p.curvature, 0.5, 1e-15, "quad curvature");
    check(!p.saturated, "quad unsaturated");
  }
  {
    PhiValue p = phi_eval(PhiKind::kExponential, 0.5, 0.0);
    check_close(p.value, 1.0, 1e-15, "exp value at 0");
    check_close(p.slope, 0.5, 1e-15, "exp slope at 0");
    check_close(p.curvature, 0.25, 1e-15, "exp curvature at 0");
  }
  {
    PhiValue p = phi_eval(PhiKind::kExponential, 0.1, 10.0);
    const double e = std::exp(1.0);
    check_close(p.value, e, 1e-12, "exp value at e");
    check_close(p.slope, 0.1 * e, 1e-12, "exp slope at e");
    check_close(p.curvature, 0.01 * e, 1e-12, "exp curvature at e");
  }

  // Exponent cap keeps values finite and flags the event.
  {
    PhiValue p = phi_eval(PhiKind::kExponential, 1.0, 600.0);
    check(p.saturated, "saturation flagged");
    check(std::isfinite(p.value) && std::isfinite(p.slope) && std::isfinite(p.curvature),
          "saturated values finite");
    check_close(p.value, std::exp(500.0), std::exp(500.0) * 1e-12, "saturated value");
  }

  // Slope and curvature agree with central finite differences.
  {
    Rng rng(42);
    const double h = 1e-5;
    for (int trial = 0; trial < 200; ++trial) {
      PhiKind kind = (trial % 2 == 0) ? PhiKind::kQuadratic : PhiKind::kExponential;
      double param = (kind == PhiKind::kQuadratic) ? (1.0 + 9.0 * rng.uniform01())
                                                   : (0.05 + 0.5 * rng.uniform01());
      double x = 10.0 * rng.uniform01();
      PhiValue p = phi_eval(kind, param, x);
      double up = phi_eval(kind, param, x + h).value;
      double dn = phi_eval(kind, param, x - h).value;
      double fd_slope = (up - dn) / (2.0 * h);
      double fd_curv = (up - 2.0 * p.value + dn) / (h * h);
      check_close(fd_slope, p.slope, 1e-5 * std::max(1.0, std::fabs(p.slope)),
                  "finite-difference slope");
      check_close(fd_curv, p.curvature, 1e-3 * std::max(1.0, std::fabs(p.curvature)),
                  "finite-difference curvature");
    }
  }

  // Horizon-tuned parameters.
  check_close(auto_parameter(PhiKind::kQuadratic, 4, 10000, 1.0, 0.0), 200.0, 1e-12,
              "auto quadratic V");
  check_close(auto_parameter(PhiKind::kExponential, 4, 10000, 1.0, 0.0), 0.000625, 1e-15,
              "auto exponential round-wise");
  check_close(auto_parameter(PhiKind::kExponential, 4, 10000, 1.0, 100.0), 1.0 / 1800.0,
              1e-15, "auto exponential with budget");

  // Frozen backlog path.
  {
    QueueState s{{0.0}, 0};
    queue_update(s, {0.5});
    check_close(s.q[0], 0.5, 1e-15, "path step 1");
    queue_update(s, {-0.3});
    check_close(s.q[0], 0.2, 1e-15, "path step 2");
    queue_update(s, {0.2});
    check_close(s.q[0], 0.4, 1e-15, "path step 3");
    check(s.round == 3, "round counter");
  }

  // All non-positive costs leave the backlog at zero.
  {
    QueueState s{{0.0, 0.0}, 0};
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
      queue_update(s, {-rng.uniform01(), -rng.uniform01()});
      check(s.q[0] == 0.0 && s.q[1] == 0.0, "non-positive costs keep zero backlog");
    }
  }

  // Non-negative costs accumulate exactly.
  {
    QueueState s{{0.0}, 0};
    double sum = 0.0;
    Rng rng(6);
    for (int t = 0; t < 100; ++t) {
      double c = rng.uniform01();
      queue_update(s, {c});
      sum += c;
      check(s.q[0] == sum, "non-negative costs sum exactly");
    }
  }

  // Backlog equals the maximum suffix sum of the cost stream.
  {
    Rng rng(77);
    std::vector<double> costs;
    QueueState s{{0.0}, 0};
    for (int t = 0; t < 1000; ++t) {
      double c = 2.0 * rng.uniform01() - 1.0;
      costs.push_back(c);
      double prev = s.q[0];
      queue_update(s, {c});
      check(s.q[0] >= prev + c - 1e-15, "clipping only raises the backlog");

      double best = 0.0;
      double suffix = 0.0;
      for (int i = static_cast<int>(costs.size()) - 1; i >= 0; --i) {
        suffix += costs[i];
        best = std::max(best, suffix);
      }
      check(std::fabs(s.q[0] - best) <= 1e-12, "backlog equals max suffix sum");
    }
  }

  // Wider range admits shifted costs; violations are rejected.
  {
    QueueState s{{0.0}, 0};
    queue_update(s, {-1.5}, -2.0);
    check(s.q[0] == 0.0, "shifted cost admitted");
    check_throws([] {
      QueueState t{{0.0}, 0};
      queue_update(t, {-1.5});
    }, "cost below range rejected");
    check_throws([] {
      QueueState t{{0.0}, 0};
      queue_update(t, {1.5});
    }, "cost above range rejected");
    check_throws([] {
      QueueState t{{0.0, 0.0}, 0};
      queue_update(t, {0.5});
    }, "dimension mismatch rejected");
  }

  check_throws([] { phi_eval(PhiKind::kQuadratic, 0.0, 1.0); }, "zero parameter rejected");
  check_throws([] { auto_parameter(PhiKind::kQuadratic, 1, 100, 1.0, 0.0); },
               "single arm rejected");
  check_throws([] { auto_parameter(PhiKind::kExponential, 4, 100, 1.0, -1.0); },
               "negative budget rejected");

  return testutil::done("test_lyapunov");
}
