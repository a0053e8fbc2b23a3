#pragma once
// The constrained contextual bandit round loop: Lyapunov-weighted surrogate
// rewards over oracle predictions, an adaptive IGW exploration schedule, and
// queue updates on (optionally shifted) realized costs. Also the hard-stopping
// wrapper that enforces a strict cumulative budget, and the epoch-wise EXP3
// ensemble over guesses of the oracle error budget.
#include <cstdint>
#include <vector>

#include "ccb/envs.hpp"
#include "ccb/igw.hpp"
#include "ccb/lyapunov.hpp"
#include "ccb/oracle.hpp"
#include "ccb/rng.hpp"

namespace ccb {

struct ControllerConfig {
  // Placeholder oracle; every real run replaces it with one sized to the
  // instance (the controller rejects mismatched arm counts).
  RegressionOracle reward_oracle = FiniteClassOracle(std::vector<Table>{{{0.0}}});
  std::vector<RegressionOracle> cost_oracles;  // one per resource
  PhiKind phi_kind = PhiKind::kQuadratic;
  double phi_param = 0.0;   // <= 0 selects the auto parameter for the horizon
  double u_t = 1.0;         // oracle error budget, drives the gamma schedule
  double cost_shift = 0.0;  // subtracted from realized costs in the queue only
  double budget = 0.0;      // enters the exponential auto parameter
};

struct SurrogateReward {
  std::vector<double> values;     // f_hat - sum_i phi_prime[i] * g_hat[i]
  std::vector<double> phi_prime;  // snapshot used to build the values
};

// Combines reward and cost estimates with the queue-derived weights; all
// estimates must lie in [-1, 1] and the weights must be non-negative.
SurrogateReward surrogate(const std::vector<double>& f_hat,
                          const std::vector<std::vector<double>>& g_hat,
                          const std::vector<double>& phi_prime);

struct GammaStep {
  double z = 0.0;      // max(1, |phi_prime|^2)
  double z_sum = 0.0;  // running sum including this round
  double gamma = 0.0;  // (1 / (2 z)) * sqrt((K / u_t) * z_sum)
};

// Advances the exploration schedule by one round; phi_prime is the pre-round
// queue weight vector and z_sum_before the sum over the previous rounds.
GammaStep gamma_schedule(const std::vector<double>& phi_prime, double z_sum_before,
                         int num_arms, double u_t);

struct RoundRecord {
  long long round = 0;  // 1-based
  int context = 0;
  int action = 0;
  double reward = 0.0;
  std::vector<double> costs;  // realized, unshifted
  std::vector<double> queue_after;
  double gamma = 0.0;
  double lambda_igw = 0.0;
  std::vector<double> surrogate;
  std::vector<double> phi_prime;
  std::vector<double> f_hat;
  std::vector<std::vector<double>> g_hat;  // [resource][arm]
  bool phi_saturated = false;
  bool forced_null = false;  // round played after a hard stop
};

struct RunTrace {
  std::vector<RoundRecord> rounds;
  QueueState final_queue;
  double phi_param = 0.0;        // resolved potential parameter
  long long stop_round = -1;     // first forced-NULL round; -1 when never stopped
  std::vector<int> epoch_choices;  // ensemble copy per epoch; empty otherwise
};

// One controller instance drives one run; copies are independent.
class Controller {
 public:
  Controller(const ProblemInstance& instance, const ControllerConfig& config,
             long long horizon);

  // Runs one full round: context, predictions, surrogate, gamma, IGW draw,
  // realization, oracle updates, queue update.
  RoundRecord step(Rng& rng);

  // Plays the NULL arm with all learning and queue dynamics frozen; the
  // context draw still advances the schedule.
  RoundRecord forced_null_step(Rng& rng);

  // Clears queue, exploration schedule, and round counter; oracles persist.
  void reset_dynamics();

  const QueueState& queue() const { return queue_; }
  double z_sum() const { return z_sum_; }
  long long round() const { return round_; }
  double phi_param() const { return phi_param_; }
  const RegressionOracle& reward_oracle() const { return reward_oracle_; }
  const std::vector<RegressionOracle>& cost_oracles() const { return cost_oracles_; }

 private:
  ProblemInstance instance_;
  RegressionOracle reward_oracle_;
  std::vector<RegressionOracle> cost_oracles_;
  PhiKind phi_kind_;
  double phi_param_;
  double u_t_;
  double cost_shift_;
  QueueState queue_;
  double z_sum_ = 0.0;
  long long round_ = 0;
};

// Runs the controller for `horizon` rounds with a fresh rng stream.
RunTrace run(const ProblemInstance& instance, const ControllerConfig& config,
             long long horizon, std::uint64_t seed);

struct HardStopSpec {
  enum class Kind { kMultiplicative, kAdditive };
  Kind kind = Kind::kMultiplicative;
  double value = 1.0;  // c for multiplicative, A for additive
};

// Runs with the internal budget reduced to B / (c ln T) or B - A (driving the
// potential auto parameter and the cost shift), while tracking realized cost
// against the full budget: once the next pull could overshoot it, the NULL arm
// is played for the remaining rounds with learning frozen. The realized
// cumulative cost never exceeds budget + 1.
RunTrace hard_stop_run(const ProblemInstance& instance, const ControllerConfig& config,
                       long long horizon, double budget, const HardStopSpec& scaling,
                       std::uint64_t seed);

// Epoch-wise EXP3 master over controller copies, one per guess of the oracle
// error budget (default guesses: powers of two from 1 up to at least the
// horizon). Epochs have length ceil(sqrt(horizon)); the copy chosen for an
// epoch has its queue and schedule reset and is scored by its normalized
// surrogate loss over the epoch.
RunTrace ensemble_run(const ProblemInstance& instance, const ControllerConfig& config,
                      long long horizon, std::uint64_t seed,
                      std::vector<double> guesses = {});

}  // namespace ccb
