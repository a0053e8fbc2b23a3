#pragma once
// Problem instances for constrained contextual bandit simulations.
//
// An instance is a finite table of per-(context, arm) reward means f_star,
// per-resource cost mean tables g_star, a context schedule, a cost budget,
// and a feasibility tag describing which benchmark definitions apply.
//
// Realization laws are two-point:
//   reward in {-1, +1} with mean f_star(x, a);
//   binary cost channel in {0, 1} with mean g_star(x, a);
//   signed cost channel in {-1, +1} with mean g_star(x, a).
// A designated NULL arm realizes reward 0 and cost 0 surely and consumes no
// randomness.
#include <functional>
#include <string>
#include <vector>

#include "ccb/rng.hpp"

namespace ccb {

enum class CostChannel { kBinary, kSigned };

enum class FeasibilityTag { kInExpectation, kSlater, kAlmostSure, kLongTerm };

struct ContextSchedule {
  enum class Kind { kIid, kScripted, kPhased, kCallback };
  Kind kind = Kind::kIid;
  std::vector<double> probs;        // kIid: one probability per context
  std::vector<int> sequence;        // kScripted: context per round
  long long block = 0;              // kPhased: rounds per phase
  std::vector<int> phase_contexts;  // kPhased: context per phase
  // kCallback: adversarial hook, round -> context. Not serializable.
  std::function<int(long long)> callback;
};

struct ProblemInstance {
  int num_contexts = 0;
  int num_arms = 0;
  int null_arm = -1;  // -1 when absent
  std::vector<std::vector<double>> f_star;               // [context][arm]
  std::vector<std::vector<std::vector<double>>> g_star;  // [resource][context][arm]
  std::vector<CostChannel> channels;                     // one per resource
  ContextSchedule schedule;
  double budget = 0.0;
  FeasibilityTag tag = FeasibilityTag::kInExpectation;
  double slater_margin = 0.0;  // kSlater only

  int num_resources() const { return static_cast<int>(g_star.size()); }
};

// Throws std::invalid_argument describing the first violated constraint.
void validate_instance(const ProblemInstance& instance);

// Context shown at `round` (0-based). IID schedules consume one uniform draw.
int next_context(const ProblemInstance& instance, long long round, Rng& rng);

struct Realization {
  double reward = 0.0;
  std::vector<double> costs;
};

// Draws one reward and one cost per resource. Draw order is fixed: reward
// first, then resources in index order. The NULL arm consumes no draws.
Realization realize(const ProblemInstance& instance, int context, int arm, Rng& rng);

// Arms whose realized cost is zero or negative with certainty on every
// resource: the NULL arm, binary-channel arms with mean 0, signed-channel
// arms with mean -1.
std::vector<int> surely_safe_arms(const ProblemInstance& instance, int context);

// Lowest-index arm per context whose cost mean is at most -margin on every
// resource; throws when some context has none.
std::vector<int> slater_arms(const ProblemInstance& instance);

// Hard phased instance: floor(horizon / budget) phases of length `budget`,
// a NULL arm, and a unit-cost arm whose reward mean climbs as phase_index *
// (budget / horizon) through `peak_phase` phases and then drops to zero.
ProblemInstance make_lower_bound_instance(long long horizon, long long budget,
                                          int peak_phase);

// Returns `base` re-tagged with slack `epsilon` in (0, 1). Contexts that
// already hold an arm with cost mean at most -epsilon on every resource keep
// their tables; otherwise one non-NULL arm is planted at exactly -epsilon.
// Throws when planting is impossible (binary channels, or no non-NULL arm).
ProblemInstance make_slater_instance(const ProblemInstance& base, double epsilon);

std::string instance_to_json(const ProblemInstance& instance);
ProblemInstance instance_from_json(const std::string& text);
void save_instance(const ProblemInstance& instance, const std::string& path);
ProblemInstance load_instance(const std::string& path);

}  // namespace ccb
