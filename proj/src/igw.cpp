#include "ccb/igw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccb {

IgwDistribution igw_solve(const std::vector<double>& losses, double gamma) {
  const int k = static_cast<int>(losses.size());
  if (k < 2) throw std::invalid_argument("igw_solve: need at least two arms");
  if (!(gamma >= 0.0)) throw std::invalid_argument("igw_solve: gamma must be >= 0");
  for (double l : losses) {
    if (!std::isfinite(l)) throw std::invalid_argument("igw_solve: losses must be finite");
  }

  IgwDistribution out;
  out.greedy_arm =
      static_cast<int>(std::min_element(losses.begin(), losses.end()) - losses.begin());
  const double loss_min = losses[out.greedy_arm];

  std::vector<double> gaps(losses.size());
  double gap_max = 0.0;
  for (std::size_t a = 0; a < losses.size(); ++a) {
    gaps[a] = losses[a] - loss_min;
    gap_max = std::max(gap_max, gaps[a]);
  }

  if (gamma == 0.0 || gap_max == 0.0) {
    out.probs.assign(losses.size(), 1.0 / k);
    out.lambda = static_cast<double>(k);
    return out;
  }

  // sum_a 1/(lambda + 2*gamma*gap(a)) is strictly decreasing in lambda,
  // >= 1 at lambda = 1 and <= 1 at lambda = K, so the root lies in [1, K].
  double lo = 1.0;
  double hi = static_cast<double>(k);
  double lambda = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    lambda = 0.5 * (lo + hi);
    double s = 0.0;
    for (double g : gaps) s += 1.0 / (lambda + 2.0 * gamma * g);
    if (std::abs(s - 1.0) <= 1e-12) break;
    if (s > 1.0) {
      lo = lambda;
    } else {
      hi = lambda;
    }
  }

  out.lambda = lambda;
  out.probs.resize(losses.size());
  for (std::size_t a = 0; a < losses.size(); ++a) {
    out.probs[a] = 1.0 / (lambda + 2.0 * gamma * gaps[a]);
  }
  return out;
}

int igw_sample(const IgwDistribution& dist, Rng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t a = 0; a < dist.probs.size(); ++a) {
    acc += dist.probs[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(dist.probs.size()) - 1;
}

RegretBound igw_regret_bound(const std::vector<double>& losses_true,
                             const std::vector<double>& losses_hat,
                             double gamma,
                             const std::vector<double>& comparator) {
  const std::size_t k = losses_true.size();
  if (losses_hat.size() != k || comparator.size() != k) {
    throw std::invalid_argument("igw_regret_bound: size mismatch");
  }
  if (!(gamma > 0.0)) throw std::invalid_argument("igw_regret_bound: gamma must be > 0");
  double mass = 0.0;
  for (double m : comparator) {
    if (m < -1e-12) throw std::invalid_argument("igw_regret_bound: comparator entry < 0");
    mass += m;
  }
  if (std::abs(mass - 1.0) > 1e-9) {
    throw std::invalid_argument("igw_regret_bound: comparator must sum to 1");
  }

  const IgwDistribution dist = igw_solve(losses_hat, gamma);
  RegretBound out;
  double est_err = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    out.gap += losses_true[a] * (dist.probs[a] - comparator[a]);
    const double d = losses_true[a] - losses_hat[a];
    est_err += dist.probs[a] * d * d;
  }
  out.bound = static_cast<double>(k) / (2.0 * gamma) + gamma * est_err;
  return out;
}

}  // namespace ccb
