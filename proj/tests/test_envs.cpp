// Tests for problem instances: validation, schedules, realization laws,
// generators, and JSON round-trip.
#include "ccb/envs.hpp"

#include <cmath>

#include "testutil.hpp"

using namespace ccb;

namespace {

ProblemInstance two_resource_instance() {
  ProblemInstance instance;
  instance.num_contexts = 1;
  instance.num_arms = 2;
  instance.f_star = {{0.3, -0.6}};
  instance.g_star = {{{0.7, 0.0}}, {{-0.2, 1.0}}};
  instance.channels = {CostChannel::kBinary, CostChannel::kSigned};
  instance.schedule.kind = ContextSchedule::Kind::kIid;
  instance.schedule.probs = {1.0};
  return instance;
}

void test_lower_bound_instance() {
  ProblemInstance instance = make_lower_bound_instance(100, 10, 3);
  testutil::check(instance.num_contexts == 10, "lower bound has horizon/budget contexts");
  testutil::check(instance.num_arms == 2 && instance.null_arm == 0,
                  "lower bound has a NULL arm and a risky arm");
  testutil::check_close(instance.f_star[0][1], 0.1, 1e-15, "phase 1 reward mean");
  testutil::check_close(instance.f_star[2][1], 0.3, 1e-15, "phase 3 reward mean");
  testutil::check(instance.f_star[3][1] == 0.0, "reward mean drops to zero after the peak");
  testutil::check(instance.f_star[9][1] == 0.0, "last phase reward mean is zero");
  for (int x = 0; x < 10; ++x) {
    testutil::check(instance.g_star[0][x][1] == 1.0, "risky arm always costs 1");
    testutil::check(instance.g_star[0][x][0] == 0.0, "NULL arm never costs");
  }
  testutil::check(instance.channels[0] == CostChannel::kBinary, "lower bound uses binary costs");
  testutil::check(instance.budget == 10.0, "budget stored");
  testutil::check(instance.tag == FeasibilityTag::kLongTerm, "lower bound uses long-term tag");

  Rng rng(1);
  testutil::check(next_context(instance, 0, rng) == 0, "first round in phase 1");
  testutil::check(next_context(instance, 9, rng) == 0, "round 9 still in phase 1");
  testutil::check(next_context(instance, 10, rng) == 1, "round 10 opens phase 2");
  testutil::check(next_context(instance, 95, rng) == 9, "round 95 in last phase");
  testutil::check(next_context(instance, 120, rng) == 9, "overflow rounds clamp to last phase");

  testutil::check_throws([] { make_lower_bound_instance(100, 101, 1); },
                         "budget above horizon rejected");
  testutil::check_throws([] { make_lower_bound_instance(100, 0, 1); },
                         "zero budget rejected");
  testutil::check_throws([] { make_lower_bound_instance(100, 10, 0); },
                         "peak phase below 1 rejected");
  testutil::check_throws([] { make_lower_bound_instance(100, 10, 11); },
                         "peak phase beyond phase count rejected");
}

void test_slater() {
  ProblemInstance instance;
  instance.num_contexts = 1;
  instance.num_arms = 3;
  instance.f_star = {{0.2, 0.1, 0.9}};
  instance.g_star = {{{0.5, -0.4, 0.1}}};
  instance.channels = {CostChannel::kSigned};
  instance.schedule.probs = {1.0};
  instance.tag = FeasibilityTag::kSlater;
  instance.slater_margin = 0.4;
  validate_instance(instance);
  std::vector<int> arms = slater_arms(instance);
  testutil::check(arms.size() == 1 && arms[0] == 1, "margin 0.4 certificate is arm 1");

  instance.slater_margin = 0.5;
  testutil::check_throws([&] { slater_arms(instance); },
                         "margin 0.5 has no certificate arm");

  // An already-certified base keeps its tables and only picks up the tag.
  instance.slater_margin = 0.0;
  instance.tag = FeasibilityTag::kInExpectation;
  ProblemInstance tagged = make_slater_instance(instance, 0.4);
  testutil::check(tagged.tag == FeasibilityTag::kSlater && tagged.slater_margin == 0.4,
                  "certified base is re-tagged");
  testutil::check(tagged.g_star == instance.g_star, "certified base keeps its costs");
  testutil::check(slater_arms(tagged) == std::vector<int>{1},
                  "certificate survives the tagging");

  // A base with no qualifying arm gets one planted at exactly -epsilon.
  ProblemInstance shallow = instance;
  shallow.g_star = {{{0.5, -0.1, 0.3}}};
  ProblemInstance planted = make_slater_instance(shallow, 0.4);
  testutil::check(planted.g_star[0][0][1] == -0.4,
                  "cheapest arm is planted at the negative slack");
  testutil::check(planted.g_star[0][0][0] == 0.5 && planted.g_star[0][0][2] == 0.3,
                  "other arms keep their costs");
  testutil::check(slater_arms(planted) == std::vector<int>{1}, "planted arm certifies");

  testutil::check_throws([&] { make_slater_instance(instance, 0.0); },
                         "zero slack rejected");
  testutil::check_throws([&] { make_slater_instance(instance, 1.0); },
                         "unit slack rejected");
  ProblemInstance binary = shallow;
  binary.channels = {CostChannel::kBinary};
  binary.g_star = {{{0.5, 0.1, 0.3}}};
  testutil::check_throws([&] { make_slater_instance(binary, 0.4); },
                         "binary channels cannot be planted");
  ProblemInstance null_only;
  null_only.num_contexts = 1;
  null_only.num_arms = 1;
  null_only.null_arm = 0;
  null_only.f_star = {{0.0}};
  null_only.g_star = {{{0.0}}};
  null_only.channels = {CostChannel::kSigned};
  null_only.schedule.probs = {1.0};
  testutil::check_throws([&] { make_slater_instance(null_only, 0.4); },
                         "NULL-only instance has nothing to plant");
}

void test_realization_laws() {
  ProblemInstance instance = two_resource_instance();
  validate_instance(instance);
  Rng rng(2026);
  const int n = 100000;
  double sum_reward = 0.0;
  double sum_binary = 0.0;
  double sum_signed = 0.0;
  for (int i = 0; i < n; ++i) {
    Realization r = realize(instance, 0, 0, rng);
    testutil::check(r.reward == 1.0 || r.reward == -1.0, "reward is two-point");
    testutil::check(r.costs[0] == 0.0 || r.costs[0] == 1.0, "binary cost in {0, 1}");
    testutil::check(r.costs[1] == 1.0 || r.costs[1] == -1.0, "signed cost in {-1, +1}");
    sum_reward += r.reward;
    sum_binary += r.costs[0];
    sum_signed += r.costs[1];
  }
  const double tol = 4.0 * std::sqrt(1.0 / n);
  testutil::check(std::fabs(sum_reward / n - 0.3) < tol, "empirical reward mean matches f_star");
  testutil::check(std::fabs(sum_binary / n - 0.7) < tol, "empirical binary cost mean matches g_star");
  testutil::check(std::fabs(sum_signed / n + 0.2) < tol, "empirical signed cost mean matches g_star");

  // Deterministic ends of the two-point laws.
  ProblemInstance sure = two_resource_instance();
  sure.f_star = {{1.0, -1.0}};
  sure.g_star = {{{1.0, 0.0}}, {{1.0, -1.0}}};
  validate_instance(sure);
  Rng rng2(5);
  for (int i = 0; i < 200; ++i) {
    Realization a = realize(sure, 0, 0, rng2);
    testutil::check(a.reward == 1.0 && a.costs[0] == 1.0 && a.costs[1] == 1.0,
                    "means at the top realize surely");
    Realization b = realize(sure, 0, 1, rng2);
    testutil::check(b.reward == -1.0 && b.costs[0] == 0.0 && b.costs[1] == -1.0,
                    "means at the bottom realize surely");
  }
}

void test_null_arm_consumes_no_draws() {
  ProblemInstance instance = two_resource_instance();
  instance.num_arms = 3;
  instance.null_arm = 2;
  instance.f_star = {{0.3, -0.6, 0.0}};
  instance.g_star = {{{0.7, 0.0, 0.0}}, {{-0.2, 1.0, 0.0}}};
  validate_instance(instance);
  Rng rng(9);
  Rng shadow(9);
  for (int i = 0; i < 50; ++i) {
    Realization r = realize(instance, 0, 2, rng);
    testutil::check(r.reward == 0.0 && r.costs[0] == 0.0 && r.costs[1] == 0.0,
                    "NULL arm realizes (0, 0) surely");
  }
  testutil::check(rng.next_u64() == shadow.next_u64(),
                  "NULL arm leaves the rng stream untouched");

  // A non-null arm consumes exactly one draw for the reward plus one per resource.
  Rng rng3(9);
  Rng shadow3(9);
  realize(instance, 0, 0, rng3);
  shadow3.next_u64();
  shadow3.next_u64();
  shadow3.next_u64();
  testutil::check(rng3.next_u64() == shadow3.next_u64(),
                  "realization consumes one draw per reward and resource");
}

void test_surely_safe_arms() {
  ProblemInstance instance;
  instance.num_contexts = 1;
  instance.num_arms = 5;
  instance.null_arm = 4;
  instance.f_star = {{0.1, 0.2, 0.3, 0.4, 0.0}};
  instance.g_star = {{{0.0, 0.5, -1.0, -0.5, 0.0}}};
  instance.channels = {CostChannel::kSigned};
  instance.schedule.probs = {1.0};
  validate_instance(instance);
  // Signed channel: only mean -1 is surely non-positive; arm 0 has mean 0 but
  // realizes +1 half the time.
  std::vector<int> safe = surely_safe_arms(instance, 0);
  testutil::check(safe == std::vector<int>{2, 4}, "signed channel safe arms");

  instance.channels = {CostChannel::kBinary};
  instance.g_star = {{{0.0, 0.5, 0.2, 0.9, 0.0}}};
  std::vector<int> safe2 = surely_safe_arms(instance, 0);
  testutil::check(safe2 == std::vector<int>{0, 4}, "binary channel safe arms");
}

void test_schedules() {
  ProblemInstance instance = two_resource_instance();
  instance.num_contexts = 2;
  instance.f_star = {{0.3, -0.6}, {0.1, 0.2}};
  instance.g_star = {{{0.7, 0.0}, {0.1, 0.2}}, {{-0.2, 1.0}, {0.0, 0.0}}};

  instance.schedule.kind = ContextSchedule::Kind::kIid;
  instance.schedule.probs = {0.25, 0.75};
  validate_instance(instance);
  Rng rng(31);
  const int n = 100000;
  int count0 = 0;
  for (int i = 0; i < n; ++i) {
    if (next_context(instance, i, rng) == 0) ++count0;
  }
  testutil::check(std::fabs(static_cast<double>(count0) / n - 0.25) < 4.0 * std::sqrt(1.0 / n),
                  "iid schedule hits the context frequencies");

  instance.schedule.kind = ContextSchedule::Kind::kScripted;
  instance.schedule.sequence = {1, 0, 1};
  validate_instance(instance);
  testutil::check(next_context(instance, 0, rng) == 1 && next_context(instance, 1, rng) == 0 &&
                      next_context(instance, 2, rng) == 1,
                  "scripted schedule replays the sequence");
  testutil::check_throws([&] { next_context(instance, 3, rng); },
                         "scripted schedule shorter than horizon throws");

  instance.schedule.kind = ContextSchedule::Kind::kCallback;
  instance.schedule.callback = [](long long round) { return static_cast<int>(round % 2); };
  validate_instance(instance);
  testutil::check(next_context(instance, 6, rng) == 0 && next_context(instance, 7, rng) == 1,
                  "callback schedule consults the hook");
  testutil::check_throws([&] { instance_to_json(instance); },
                         "callback schedules are not serializable");
}

void test_json_round_trip() {
  ProblemInstance instance;
  instance.num_contexts = 2;
  instance.num_arms = 3;
  instance.null_arm = 2;
  instance.f_star = {{0.9, 0.2, 0.0}, {0.7, 0.5, 0.0}};
  instance.g_star = {{{0.6, -0.5, 0.0}, {0.0, 0.0, 0.0}}};
  instance.channels = {CostChannel::kSigned};
  instance.schedule.kind = ContextSchedule::Kind::kPhased;
  instance.schedule.block = 8;
  instance.schedule.phase_contexts = {0, 1, 0};
  instance.budget = 12.5;
  instance.tag = FeasibilityTag::kLongTerm;
  const std::string text = instance_to_json(instance);
  ProblemInstance back = instance_from_json(text);
  testutil::check(back.num_contexts == 2 && back.num_arms == 3 && back.null_arm == 2,
                  "round trip keeps dimensions");
  testutil::check(back.f_star == instance.f_star && back.g_star == instance.g_star,
                  "round trip keeps tables");
  testutil::check(back.channels == instance.channels, "round trip keeps channels");
  testutil::check(back.schedule.kind == ContextSchedule::Kind::kPhased &&
                      back.schedule.block == 8 &&
                      back.schedule.phase_contexts == instance.schedule.phase_contexts,
                  "round trip keeps the schedule");
  testutil::check(back.budget == 12.5 && back.tag == FeasibilityTag::kLongTerm,
                  "round trip keeps budget and tag");

  testutil::check_throws([] { instance_from_json("{"); }, "malformed json rejected");
  testutil::check_throws([] { instance_from_json("{\"schema\": \"nope\"}"); },
                         "wrong schema rejected");
  testutil::check_throws(
      [&] {
        std::string bad = text;
        const auto pos = bad.find("\"signed\"");
        bad.replace(pos, 8, "\"basket\"");
        instance_from_json(bad);
      },
      "unknown channel rejected");
}

void test_validation_errors() {
  ProblemInstance instance = two_resource_instance();
  validate_instance(instance);

  ProblemInstance bad = instance;
  bad.f_star[0][0] = 1.5;
  testutil::check_throws([&] { validate_instance(bad); }, "reward mean above 1 rejected");

  bad = instance;
  bad.g_star[0][0][0] = -0.5;  // binary channel
  testutil::check_throws([&] { validate_instance(bad); },
                         "negative binary cost mean rejected");

  bad = instance;
  bad.schedule.probs = {0.5};
  testutil::check_throws([&] { validate_instance(bad); },
                         "iid probabilities must sum to 1");

  bad = instance;
  bad.schedule.kind = ContextSchedule::Kind::kScripted;
  bad.schedule.sequence = {0, 3};
  testutil::check_throws([&] { validate_instance(bad); },
                         "scripted schedule with unknown context rejected");

  bad = instance;
  bad.null_arm = 0;
  testutil::check_throws([&] { validate_instance(bad); },
                         "NULL arm with nonzero means rejected");

  bad = instance;
  bad.budget = -1.0;
  testutil::check_throws([&] { validate_instance(bad); }, "negative budget rejected");

  bad = instance;
  bad.channels = {CostChannel::kBinary};
  testutil::check_throws([&] { validate_instance(bad); },
                         "channel count must match resource count");
}

}  // namespace

int main() {
  test_lower_bound_instance();
  test_slater();
  test_realization_laws();
  test_null_arm_consumes_no_draws();
  test_surely_safe_arms();
  test_schedules();
  test_json_round_trip();
  test_validation_errors();
  return testutil::done("test_envs");
}
