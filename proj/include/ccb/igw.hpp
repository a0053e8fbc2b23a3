#pragma once
// Inverse-gap-weighted action sampling.
//
// Given per-arm loss estimates and an exploration weight gamma, the sampling
// distribution puts
//     p(a) = 1 / (lambda + 2 * gamma * (loss(a) - loss_min))
// on every arm, where lambda normalizes the distribution. The normalizer is
// the unique root of sum_a p(a) = 1 in [1, K]; it is located by bisection.
// gamma = 0 degenerates to the uniform distribution with lambda = K.
#include <vector>

#include "ccb/rng.hpp"

namespace ccb {

struct IgwDistribution {
  std::vector<double> probs;
  double lambda = 0.0;
  int greedy_arm = 0;  // lowest index among minimizers of the loss vector
};

// losses: one finite entry per arm, at least two arms; gamma >= 0.
IgwDistribution igw_solve(const std::vector<double>& losses, double gamma);

// One draw from the distribution, consuming a single uniform variate.
int igw_sample(const IgwDistribution& dist, Rng& rng);

struct RegretBound {
  double gap = 0.0;    // <losses_true, p> - <losses_true, comparator>
  double bound = 0.0;  // K/(2*gamma) + gamma * E_p (losses_true - losses_hat)^2
};

// Per-round regret certificate for the distribution p = igw_solve(losses_hat,
// gamma): the realized loss gap against any fixed comparator distribution is
// bounded by an exploration term plus the estimation error under p.
// comparator must be a probability vector over the arms; gamma must be > 0.
RegretBound igw_regret_bound(const std::vector<double>& losses_true,
                             const std::vector<double>& losses_hat,
                             double gamma,
                             const std::vector<double>& comparator);

}  // namespace ccb
