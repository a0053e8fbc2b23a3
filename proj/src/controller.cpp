// Round loop wiring surrogate construction, the adaptive exploration schedule,
// IGW sampling, oracle feedback, and queue dynamics; plus the hard-stopping
// budget wrapper and the epoch-wise EXP3 ensemble over error-budget guesses.
#include "ccb/controller.hpp"

#include <cmath>
#include <stdexcept>

namespace ccb {
namespace {

void check_estimate_row(const std::vector<double>& row, const char* who) {
  for (double v : row) {
    if (!std::isfinite(v) || v < -1.0 - 1e-9 || v > 1.0 + 1e-9) {
      throw std::invalid_argument(std::string(who) + ": estimates must lie in [-1, 1]");
    }
  }
}

}  // namespace

SurrogateReward surrogate(const std::vector<double>& f_hat,
                          const std::vector<std::vector<double>>& g_hat,
                          const std::vector<double>& phi_prime) {
  if (f_hat.empty()) throw std::invalid_argument("surrogate: empty reward row");
  if (g_hat.size() != phi_prime.size() || g_hat.empty()) {
    throw std::invalid_argument("surrogate: one weight per cost row required");
  }
  check_estimate_row(f_hat, "surrogate");
  for (const auto& row : g_hat) {
    if (row.size() != f_hat.size()) {
      throw std::invalid_argument("surrogate: cost row width mismatch");
    }
    check_estimate_row(row, "surrogate");
  }
  for (double w : phi_prime) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("surrogate: weights must be finite and non-negative");
    }
  }
  SurrogateReward out;
  out.phi_prime = phi_prime;
  out.values = f_hat;
  for (std::size_t i = 0; i < g_hat.size(); ++i) {
    for (std::size_t a = 0; a < f_hat.size(); ++a) {
      out.values[a] -= phi_prime[i] * g_hat[i][a];
    }
  }
  return out;
}

GammaStep gamma_schedule(const std::vector<double>& phi_prime, double z_sum_before,
                         int num_arms, double u_t) {
  if (num_arms < 2) throw std::invalid_argument("gamma_schedule: need at least two arms");
  if (!(u_t > 0.0) || !std::isfinite(u_t)) {
    throw std::invalid_argument("gamma_schedule: error budget must be positive");
  }
  if (!(z_sum_before >= 0.0)) {
    throw std::invalid_argument("gamma_schedule: running sum must be non-negative");
  }
  double norm_sq = 0.0;
  for (double w : phi_prime) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("gamma_schedule: weights must be finite and non-negative");
    }
    norm_sq += w * w;
  }
  GammaStep out;
  out.z = std::max(1.0, norm_sq);
  out.z_sum = z_sum_before + out.z;
  out.gamma = (1.0 / (2.0 * out.z)) * std::sqrt((num_arms / u_t) * out.z_sum);
  return out;
}

Controller::Controller(const ProblemInstance& instance, const ControllerConfig& config,
                       long long horizon)
    : instance_(instance),
      reward_oracle_(config.reward_oracle),
      cost_oracles_(config.cost_oracles),
      phi_kind_(config.phi_kind),
      u_t_(config.u_t),
      cost_shift_(config.cost_shift) {
  validate_instance(instance_);
  if (instance_.num_arms < 2) {
    throw std::invalid_argument("controller: instance needs at least two arms");
  }
  if (horizon < 0) throw std::invalid_argument("controller: horizon must be non-negative");
  if (!(u_t_ > 0.0) || !std::isfinite(u_t_)) {
    throw std::invalid_argument("controller: error budget must be positive");
  }
  if (!std::isfinite(config.cost_shift) || config.cost_shift < 0.0 ||
      config.cost_shift > 1.0) {
    throw std::invalid_argument("controller: cost shift must lie in [0, 1]");
  }
  if (!std::isfinite(config.budget) || config.budget < 0.0) {
    throw std::invalid_argument("controller: budget must be finite and non-negative");
  }
  if (cost_oracles_.size() != static_cast<std::size_t>(instance_.num_resources())) {
    throw std::invalid_argument("controller: one cost oracle per resource required");
  }
  if (oracle_predict(reward_oracle_, 0).size() !=
      static_cast<std::size_t>(instance_.num_arms)) {
    throw std::invalid_argument("controller: reward oracle arm count mismatch");
  }
  for (auto& oracle : cost_oracles_) {
    if (oracle_predict(oracle, 0).size() != static_cast<std::size_t>(instance_.num_arms)) {
      throw std::invalid_argument("controller: cost oracle arm count mismatch");
    }
  }
  if (config.phi_param > 0.0) {
    phi_param_ = config.phi_param;
  } else {
    phi_param_ = auto_parameter(phi_kind_, instance_.num_arms, std::max(horizon, 1LL),
                                u_t_, config.budget);
  }
  queue_.q.assign(static_cast<std::size_t>(instance_.num_resources()), 0.0);
}

RoundRecord Controller::step(Rng& rng) {
  const int context = next_context(instance_, round_, rng);
  RoundRecord rec;
  rec.round = round_ + 1;
  rec.context = context;
  rec.f_hat = oracle_predict(reward_oracle_, context);
  rec.g_hat.resize(cost_oracles_.size());
  for (std::size_t i = 0; i < cost_oracles_.size(); ++i) {
    rec.g_hat[i] = oracle_predict(cost_oracles_[i], context);
  }
  std::vector<double> phi_prime(queue_.q.size());
  for (std::size_t i = 0; i < queue_.q.size(); ++i) {
    const PhiValue pv = phi_eval(phi_kind_, phi_param_, queue_.q[i]);
    phi_prime[i] = pv.slope;
    rec.phi_saturated = rec.phi_saturated || pv.saturated;
  }
  const SurrogateReward sur = surrogate(rec.f_hat, rec.g_hat, phi_prime);
  const GammaStep gs =
      gamma_schedule(phi_prime, z_sum_, instance_.num_arms, u_t_);
  z_sum_ = gs.z_sum;
  std::vector<double> losses(sur.values.size());
  for (std::size_t a = 0; a < losses.size(); ++a) losses[a] = -sur.values[a];
  const IgwDistribution dist = igw_solve(losses, gs.gamma);
  const int action = igw_sample(dist, rng);
  const Realization real = realize(instance_, context, action, rng);
  // Oracles always learn the unshifted realization; the shift is a known
  // constant that only enters the queue.
  oracle_update(reward_oracle_, context, action, real.reward,
                instance_.f_star[context][action]);
  for (std::size_t i = 0; i < cost_oracles_.size(); ++i) {
    oracle_update(cost_oracles_[i], context, action, real.costs[i],
                  instance_.g_star[i][context][action]);
  }
  std::vector<double> shifted = real.costs;
  for (double& c : shifted) c -= cost_shift_;
  queue_update(queue_, shifted, cost_shift_ != 0.0 ? -2.0 : -1.0);
  ++round_;
  rec.action = action;
  rec.reward = real.reward;
  rec.costs = real.costs;
  rec.queue_after = queue_.q;
  rec.gamma = gs.gamma;
  rec.lambda_igw = dist.lambda;
  rec.surrogate = sur.values;
  rec.phi_prime = phi_prime;
  return rec;
}

RoundRecord Controller::forced_null_step(Rng& rng) {
  if (instance_.null_arm < 0) {
    throw std::invalid_argument("controller: forced NULL round needs a NULL arm");
  }
  const int context = next_context(instance_, round_, rng);
  ++round_;
  RoundRecord rec;
  rec.round = round_;
  rec.context = context;
  rec.action = instance_.null_arm;
  rec.costs.assign(queue_.q.size(), 0.0);
  rec.queue_after = queue_.q;
  rec.phi_prime.assign(queue_.q.size(), 0.0);
  rec.surrogate.assign(static_cast<std::size_t>(instance_.num_arms), 0.0);
  rec.forced_null = true;
  return rec;
}

void Controller::reset_dynamics() {
  queue_.q.assign(queue_.q.size(), 0.0);
  queue_.round = 0;
  z_sum_ = 0.0;
  round_ = 0;
}

RunTrace run(const ProblemInstance& instance, const ControllerConfig& config,
             long long horizon, std::uint64_t seed) {
  Controller controller(instance, config, horizon);
  Rng rng(seed);
  RunTrace trace;
  trace.phi_param = controller.phi_param();
  trace.rounds.reserve(static_cast<std::size_t>(horizon));
  for (long long t = 0; t < horizon; ++t) {
    trace.rounds.push_back(controller.step(rng));
  }
  trace.final_queue = controller.queue();
  return trace;
}

RunTrace hard_stop_run(const ProblemInstance& instance, const ControllerConfig& config,
                       long long horizon, double budget, const HardStopSpec& scaling,
                       std::uint64_t seed) {
  validate_instance(instance);
  if (instance.num_resources() != 1) {
    throw std::invalid_argument("hard_stop_run: exactly one resource is supported");
  }
  if (instance.null_arm < 0) {
    throw std::invalid_argument("hard_stop_run: instance needs a NULL arm");
  }
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw std::invalid_argument("hard_stop_run: budget must be positive");
  }
  double reduced = 0.0;
  if (scaling.kind == HardStopSpec::Kind::kMultiplicative) {
    if (!(scaling.value > 0.0)) {
      throw std::invalid_argument("hard_stop_run: multiplicative factor must be positive");
    }
    if (horizon < 2) {
      throw std::invalid_argument("hard_stop_run: multiplicative scaling needs horizon >= 2");
    }
    reduced = budget / (scaling.value * std::log(static_cast<double>(horizon)));
  } else {
    if (!(scaling.value >= 0.0)) {
      throw std::invalid_argument("hard_stop_run: additive reduction must be non-negative");
    }
    reduced = budget - scaling.value;
  }
  if (!(reduced > 0.0)) {
    throw std::invalid_argument(
        "hard_stop_run: the scaled internal budget must stay positive");
  }
  ControllerConfig internal = config;
  internal.budget = reduced;
  internal.cost_shift = std::min(reduced / static_cast<double>(std::max(horizon, 1LL)), 1.0);
  Controller controller(instance, internal, horizon);
  Rng rng(seed);
  RunTrace trace;
  trace.phi_param = controller.phi_param();
  trace.rounds.reserve(static_cast<std::size_t>(horizon));
  double spent = 0.0;
  for (long long t = 0; t < horizon; ++t) {
    if (trace.stop_round < 0 && spent + 1.0 > budget) {
      trace.stop_round = t + 1;
    }
    if (trace.stop_round >= 0) {
      trace.rounds.push_back(controller.forced_null_step(rng));
    } else {
      trace.rounds.push_back(controller.step(rng));
      spent += trace.rounds.back().costs[0];
    }
  }
  if (spent > budget + 1.0) {
    throw std::logic_error("hard_stop_run: cumulative cost overshot the budget");
  }
  trace.final_queue = controller.queue();
  return trace;
}

RunTrace ensemble_run(const ProblemInstance& instance, const ControllerConfig& config,
                      long long horizon, std::uint64_t seed,
                      std::vector<double> guesses) {
  if (horizon < 4) throw std::invalid_argument("ensemble_run: horizon must be at least 4");
  if (guesses.empty()) {
    guesses.push_back(1.0);
    while (guesses.back() < static_cast<double>(horizon)) {
      guesses.push_back(2.0 * guesses.back());
    }
  }
  for (double guess : guesses) {
    if (!(guess > 0.0) || !std::isfinite(guess)) {
      throw std::invalid_argument("ensemble_run: guesses must be positive");
    }
  }
  const std::size_t num_copies = guesses.size();
  std::vector<Controller> copies;
  copies.reserve(num_copies);
  for (double guess : guesses) {
    ControllerConfig copy_config = config;
    copy_config.u_t = guess;
    copies.emplace_back(instance, copy_config, horizon);
  }
  const long long epoch_length =
      static_cast<long long>(std::ceil(std::sqrt(static_cast<double>(horizon))));
  const long long num_epochs = (horizon + epoch_length - 1) / epoch_length;
  const double rate =
      std::sqrt(std::log(static_cast<double>(num_copies)) /
                (static_cast<double>(num_epochs) * static_cast<double>(num_copies)));

  Rng rng(seed);
  RunTrace trace;
  trace.rounds.reserve(static_cast<std::size_t>(horizon));
  std::vector<double> log_weights(num_copies, 0.0);
  double phi_prime_peak = 0.0;
  long long played = 0;
  for (long long epoch = 0; epoch < num_epochs; ++epoch) {
    double top = log_weights[0];
    for (double lw : log_weights) top = std::max(top, lw);
    std::vector<double> probs(num_copies);
    double total = 0.0;
    for (std::size_t i = 0; i < num_copies; ++i) {
      probs[i] = std::exp(log_weights[i] - top);
      total += probs[i];
    }
    for (double& p : probs) p /= total;
    const double u = rng.uniform01();
    std::size_t chosen = num_copies - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < num_copies; ++i) {
      acc += probs[i];
      if (u < acc) {
        chosen = i;
        break;
      }
    }
    trace.epoch_choices.push_back(static_cast<int>(chosen));
    Controller& active = copies[chosen];
    active.reset_dynamics();
    const long long rounds_this_epoch = std::min(epoch_length, horizon - played);
    double surrogate_loss = 0.0;
    for (long long r = 0; r < rounds_this_epoch; ++r) {
      RoundRecord rec = active.step(rng);
      rec.round = ++played;
      surrogate_loss += -rec.surrogate[static_cast<std::size_t>(rec.action)];
      for (double w : rec.phi_prime) phi_prime_peak = std::max(phi_prime_peak, w);
      trace.rounds.push_back(std::move(rec));
    }
    double loss = surrogate_loss /
                  (static_cast<double>(rounds_this_epoch) * (1.0 + phi_prime_peak));
    loss = std::min(1.0, std::max(0.0, loss));
    log_weights[chosen] -= rate * loss / probs[chosen];
  }
  trace.final_queue = copies[static_cast<std::size_t>(trace.epoch_choices.back())].queue();
  trace.phi_param = copies[0].phi_param();
  return trace;
}

}  // namespace ccb
