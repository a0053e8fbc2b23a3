// Problem instance validation, context schedules, realization laws, instance
// generators, and JSON round-trip.
#include "ccb/envs.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ccb {
namespace {

using nlohmann::json;

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

void check_context(const ProblemInstance& instance, int context, const char* who) {
  if (context < 0 || context >= instance.num_contexts) {
    throw std::invalid_argument(std::string(who) + ": context index out of range");
  }
}

std::string channel_name(CostChannel channel) {
  return channel == CostChannel::kBinary ? "binary01" : "signed";
}

CostChannel channel_from_name(const std::string& name) {
  if (name == "binary01") return CostChannel::kBinary;
  if (name == "signed") return CostChannel::kSigned;
  throw std::invalid_argument("instance_from_json: unknown cost channel '" + name + "'");
}

std::string tag_name(FeasibilityTag tag) {
  switch (tag) {
    case FeasibilityTag::kInExpectation: return "in_expectation";
    case FeasibilityTag::kSlater: return "slater";
    case FeasibilityTag::kAlmostSure: return "almost_sure";
    case FeasibilityTag::kLongTerm: return "long_term";
  }
  throw std::logic_error("tag_name: unreachable");
}

FeasibilityTag tag_from_name(const std::string& name) {
  if (name == "in_expectation") return FeasibilityTag::kInExpectation;
  if (name == "slater") return FeasibilityTag::kSlater;
  if (name == "almost_sure") return FeasibilityTag::kAlmostSure;
  if (name == "long_term") return FeasibilityTag::kLongTerm;
  throw std::invalid_argument("instance_from_json: unknown feasibility tag '" + name + "'");
}

}  // namespace

void validate_instance(const ProblemInstance& instance) {
  if (instance.num_contexts < 1) {
    throw std::invalid_argument("validate_instance: num_contexts must be at least 1");
  }
  if (instance.num_arms < 1) {
    throw std::invalid_argument("validate_instance: num_arms must be at least 1");
  }
  if (instance.null_arm < -1 || instance.null_arm >= instance.num_arms) {
    throw std::invalid_argument("validate_instance: null_arm out of range");
  }
  const auto num_contexts = static_cast<std::size_t>(instance.num_contexts);
  const auto num_arms = static_cast<std::size_t>(instance.num_arms);
  if (instance.f_star.size() != num_contexts) {
    throw std::invalid_argument("validate_instance: f_star must have one row per context");
  }
  for (const auto& row : instance.f_star) {
    if (row.size() != num_arms) {
      throw std::invalid_argument("validate_instance: f_star row width mismatch");
    }
    for (double v : row) {
      if (!std::isfinite(v) || !in_range(v, -1.0, 1.0)) {
        throw std::invalid_argument("validate_instance: reward means must lie in [-1, 1]");
      }
    }
  }
  if (instance.g_star.empty()) {
    throw std::invalid_argument("validate_instance: at least one resource required");
  }
  if (instance.channels.size() != instance.g_star.size()) {
    throw std::invalid_argument("validate_instance: one cost channel per resource required");
  }
  for (std::size_t i = 0; i < instance.g_star.size(); ++i) {
    const auto& table = instance.g_star[i];
    const double lo = instance.channels[i] == CostChannel::kBinary ? 0.0 : -1.0;
    if (table.size() != num_contexts) {
      throw std::invalid_argument("validate_instance: g_star table must have one row per context");
    }
    for (const auto& row : table) {
      if (row.size() != num_arms) {
        throw std::invalid_argument("validate_instance: g_star row width mismatch");
      }
      for (double v : row) {
        if (!std::isfinite(v) || !in_range(v, lo, 1.0)) {
          throw std::invalid_argument(
              "validate_instance: cost means must fit the resource channel range");
        }
      }
    }
  }
  if (instance.null_arm >= 0) {
    for (int x = 0; x < instance.num_contexts; ++x) {
      if (instance.f_star[x][instance.null_arm] != 0.0) {
        throw std::invalid_argument("validate_instance: NULL arm must have zero reward mean");
      }
      for (const auto& table : instance.g_star) {
        if (table[x][instance.null_arm] != 0.0) {
          throw std::invalid_argument("validate_instance: NULL arm must have zero cost mean");
        }
      }
    }
  }
  const ContextSchedule& schedule = instance.schedule;
  switch (schedule.kind) {
    case ContextSchedule::Kind::kIid: {
      if (schedule.probs.size() != num_contexts) {
        throw std::invalid_argument("validate_instance: iid schedule needs one probability per context");
      }
      double sum = 0.0;
      for (double p : schedule.probs) {
        if (!std::isfinite(p) || p < 0.0) {
          throw std::invalid_argument("validate_instance: iid probabilities must be non-negative");
        }
        sum += p;
      }
      if (std::fabs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("validate_instance: iid probabilities must sum to 1");
      }
      break;
    }
    case ContextSchedule::Kind::kScripted: {
      if (schedule.sequence.empty()) {
        throw std::invalid_argument("validate_instance: scripted schedule must be non-empty");
      }
      for (int c : schedule.sequence) {
        if (c < 0 || c >= instance.num_contexts) {
          throw std::invalid_argument("validate_instance: scripted schedule names an unknown context");
        }
      }
      break;
    }
    case ContextSchedule::Kind::kPhased: {
      if (schedule.block < 1) {
        throw std::invalid_argument("validate_instance: phased schedule needs block length at least 1");
      }
      if (schedule.phase_contexts.empty()) {
        throw std::invalid_argument("validate_instance: phased schedule must list phase contexts");
      }
      for (int c : schedule.phase_contexts) {
        if (c < 0 || c >= instance.num_contexts) {
          throw std::invalid_argument("validate_instance: phased schedule names an unknown context");
        }
      }
      break;
    }
    case ContextSchedule::Kind::kCallback: {
      if (!schedule.callback) {
        throw std::invalid_argument("validate_instance: callback schedule needs a callable");
      }
      break;
    }
  }
  if (!std::isfinite(instance.budget) || instance.budget < 0.0) {
    throw std::invalid_argument("validate_instance: budget must be finite and non-negative");
  }
  if (instance.tag == FeasibilityTag::kSlater &&
      !(instance.slater_margin > 0.0 && instance.slater_margin < 1.0)) {
    throw std::invalid_argument("validate_instance: slater margin must lie in (0, 1)");
  }
}

int next_context(const ProblemInstance& instance, long long round, Rng& rng) {
  if (round < 0) throw std::invalid_argument("next_context: round must be non-negative");
  const ContextSchedule& schedule = instance.schedule;
  switch (schedule.kind) {
    case ContextSchedule::Kind::kIid: {
      const double u = rng.uniform01();
      double acc = 0.0;
      const int last = instance.num_contexts - 1;
      for (int x = 0; x < last; ++x) {
        acc += schedule.probs[x];
        if (u < acc) return x;
      }
      return last;
    }
    case ContextSchedule::Kind::kScripted: {
      if (round >= static_cast<long long>(schedule.sequence.size())) {
        throw std::invalid_argument("next_context: scripted schedule shorter than the horizon");
      }
      return schedule.sequence[static_cast<std::size_t>(round)];
    }
    case ContextSchedule::Kind::kPhased: {
      const long long phases = static_cast<long long>(schedule.phase_contexts.size());
      const long long phase = std::min(round / schedule.block, phases - 1);
      return schedule.phase_contexts[static_cast<std::size_t>(phase)];
    }
    case ContextSchedule::Kind::kCallback: {
      const int context = schedule.callback(round);
      check_context(instance, context, "next_context");
      return context;
    }
  }
  throw std::logic_error("next_context: unreachable");
}

Realization realize(const ProblemInstance& instance, int context, int arm, Rng& rng) {
  check_context(instance, context, "realize");
  if (arm < 0 || arm >= instance.num_arms) {
    throw std::invalid_argument("realize: arm index out of range");
  }
  Realization out;
  out.costs.assign(instance.g_star.size(), 0.0);
  if (arm == instance.null_arm) return out;
  const double f = instance.f_star[context][arm];
  out.reward = rng.uniform01() < 0.5 * (1.0 + f) ? 1.0 : -1.0;
  for (std::size_t i = 0; i < instance.g_star.size(); ++i) {
    const double g = instance.g_star[i][context][arm];
    if (instance.channels[i] == CostChannel::kBinary) {
      out.costs[i] = rng.uniform01() < g ? 1.0 : 0.0;
    } else {
      out.costs[i] = rng.uniform01() < 0.5 * (1.0 + g) ? 1.0 : -1.0;
    }
  }
  return out;
}

std::vector<int> surely_safe_arms(const ProblemInstance& instance, int context) {
  check_context(instance, context, "surely_safe_arms");
  std::vector<int> out;
  for (int a = 0; a < instance.num_arms; ++a) {
    if (a == instance.null_arm) {
      out.push_back(a);
      continue;
    }
    bool safe = true;
    for (std::size_t i = 0; i < instance.g_star.size(); ++i) {
      const double g = instance.g_star[i][context][a];
      const bool surely_non_positive =
          instance.channels[i] == CostChannel::kBinary ? g == 0.0 : g == -1.0;
      if (!surely_non_positive) {
        safe = false;
        break;
      }
    }
    if (safe) out.push_back(a);
  }
  return out;
}

std::vector<int> slater_arms(const ProblemInstance& instance) {
  if (!(instance.slater_margin > 0.0)) {
    throw std::invalid_argument("slater_arms: instance has no positive slater margin");
  }
  std::vector<int> out(static_cast<std::size_t>(instance.num_contexts), -1);
  for (int x = 0; x < instance.num_contexts; ++x) {
    for (int a = 0; a < instance.num_arms && out[static_cast<std::size_t>(x)] < 0; ++a) {
      bool ok = true;
      for (const auto& table : instance.g_star) {
        if (table[x][a] > -instance.slater_margin) {
          ok = false;
          break;
        }
      }
      if (ok) out[static_cast<std::size_t>(x)] = a;
    }
    if (out[static_cast<std::size_t>(x)] < 0) {
      throw std::invalid_argument("slater_arms: a context has no arm meeting the margin");
    }
  }
  return out;
}

ProblemInstance make_lower_bound_instance(long long horizon, long long budget,
                                          int peak_phase) {
  if (horizon < 1) {
    throw std::invalid_argument("make_lower_bound_instance: horizon must be at least 1");
  }
  if (budget < 1 || budget > horizon) {
    throw std::invalid_argument(
        "make_lower_bound_instance: budget must lie in [1, horizon]");
  }
  const long long phases = horizon / budget;
  if (peak_phase < 1 || peak_phase > phases) {
    throw std::invalid_argument(
        "make_lower_bound_instance: peak phase must lie in [1, horizon / budget]");
  }
  const double eps = static_cast<double>(budget) / static_cast<double>(horizon);
  ProblemInstance instance;
  instance.num_contexts = static_cast<int>(phases);
  instance.num_arms = 2;
  instance.null_arm = 0;
  instance.f_star.assign(static_cast<std::size_t>(phases), {0.0, 0.0});
  instance.g_star.assign(1, std::vector<std::vector<double>>(
                                static_cast<std::size_t>(phases), {0.0, 1.0}));
  instance.channels = {CostChannel::kBinary};
  for (long long l = 1; l <= peak_phase; ++l) {
    instance.f_star[static_cast<std::size_t>(l - 1)][1] = static_cast<double>(l) * eps;
  }
  instance.schedule.kind = ContextSchedule::Kind::kPhased;
  instance.schedule.block = budget;
  instance.schedule.phase_contexts.resize(static_cast<std::size_t>(phases));
  for (long long l = 0; l < phases; ++l) {
    instance.schedule.phase_contexts[static_cast<std::size_t>(l)] = static_cast<int>(l);
  }
  instance.budget = static_cast<double>(budget);
  instance.tag = FeasibilityTag::kLongTerm;
  validate_instance(instance);
  return instance;
}

ProblemInstance make_slater_instance(const ProblemInstance& base, double epsilon) {
  validate_instance(base);
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("make_slater_instance: slack must lie in (0, 1)");
  }
  ProblemInstance instance = base;
  for (int x = 0; x < instance.num_contexts; ++x) {
    bool certified = false;
    for (int a = 0; a < instance.num_arms && !certified; ++a) {
      bool ok = true;
      for (const auto& table : instance.g_star) {
        if (table[x][a] > -epsilon) {
          ok = false;
          break;
        }
      }
      certified = ok;
    }
    if (certified) continue;
    for (CostChannel channel : instance.channels) {
      if (channel == CostChannel::kBinary) {
        throw std::invalid_argument(
            "make_slater_instance: binary cost channels cannot host a negative-margin arm");
      }
    }
    // Plant the arm whose worst resource is already the cheapest.
    int planted = -1;
    double best = 2.0;
    for (int a = 0; a < instance.num_arms; ++a) {
      if (a == instance.null_arm) continue;
      double worst = -2.0;
      for (const auto& table : instance.g_star) worst = std::max(worst, table[x][a]);
      if (worst < best) {
        best = worst;
        planted = a;
      }
    }
    if (planted < 0) {
      throw std::invalid_argument("make_slater_instance: no non-NULL arm available to plant");
    }
    for (auto& table : instance.g_star) table[x][planted] = -epsilon;
  }
  instance.tag = FeasibilityTag::kSlater;
  instance.slater_margin = epsilon;
  validate_instance(instance);
  return instance;
}

std::string instance_to_json(const ProblemInstance& instance) {
  validate_instance(instance);
  json j;
  j["schema"] = "ccbandit-instance-v1";
  j["num_contexts"] = instance.num_contexts;
  j["num_arms"] = instance.num_arms;
  j["null_arm"] = instance.null_arm;
  j["f_star"] = instance.f_star;
  j["g_star"] = instance.g_star;
  json channels = json::array();
  for (CostChannel channel : instance.channels) channels.push_back(channel_name(channel));
  j["channels"] = channels;
  json schedule;
  switch (instance.schedule.kind) {
    case ContextSchedule::Kind::kIid:
      schedule["kind"] = "iid";
      schedule["probs"] = instance.schedule.probs;
      break;
    case ContextSchedule::Kind::kScripted:
      schedule["kind"] = "scripted";
      schedule["sequence"] = instance.schedule.sequence;
      break;
    case ContextSchedule::Kind::kPhased:
      schedule["kind"] = "phased";
      schedule["block"] = instance.schedule.block;
      schedule["phase_contexts"] = instance.schedule.phase_contexts;
      break;
    case ContextSchedule::Kind::kCallback:
      throw std::invalid_argument("instance_to_json: callback schedules are not serializable");
  }
  j["schedule"] = schedule;
  j["budget"] = instance.budget;
  j["tag"] = tag_name(instance.tag);
  j["slater_margin"] = instance.slater_margin;
  return j.dump(2);
}

ProblemInstance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("instance_from_json: ") + e.what());
  }
  try {
    if (j.value("schema", std::string()) != "ccbandit-instance-v1") {
      throw std::invalid_argument("instance_from_json: expected schema ccbandit-instance-v1");
    }
    ProblemInstance instance;
    instance.num_contexts = j.at("num_contexts").get<int>();
    instance.num_arms = j.at("num_arms").get<int>();
    instance.null_arm = j.value("null_arm", -1);
    instance.f_star = j.at("f_star").get<std::vector<std::vector<double>>>();
    instance.g_star =
        j.at("g_star").get<std::vector<std::vector<std::vector<double>>>>();
    for (const auto& name : j.at("channels")) {
      instance.channels.push_back(channel_from_name(name.get<std::string>()));
    }
    const json& schedule = j.at("schedule");
    const std::string kind = schedule.at("kind").get<std::string>();
    if (kind == "iid") {
      instance.schedule.kind = ContextSchedule::Kind::kIid;
      instance.schedule.probs = schedule.at("probs").get<std::vector<double>>();
    } else if (kind == "scripted") {
      instance.schedule.kind = ContextSchedule::Kind::kScripted;
      instance.schedule.sequence = schedule.at("sequence").get<std::vector<int>>();
    } else if (kind == "phased") {
      instance.schedule.kind = ContextSchedule::Kind::kPhased;
      instance.schedule.block = schedule.at("block").get<long long>();
      instance.schedule.phase_contexts =
          schedule.at("phase_contexts").get<std::vector<int>>();
    } else {
      throw std::invalid_argument("instance_from_json: unknown schedule kind '" + kind + "'");
    }
    instance.budget = j.value("budget", 0.0);
    instance.tag = tag_from_name(j.value("tag", std::string("in_expectation")));
    instance.slater_margin = j.value("slater_margin", 0.0);
    validate_instance(instance);
    return instance;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("instance_from_json: ") + e.what());
  }
}

void save_instance(const ProblemInstance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("save_instance: cannot open '" + path + "'");
  out << instance_to_json(instance) << '\n';
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_instance: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return instance_from_json(buffer.str());
}

}  // namespace ccb
