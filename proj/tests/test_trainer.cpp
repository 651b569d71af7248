#include <doctest.h>

#include <cmath>
#include <thread>

#include "sbl/trainer.hpp"
#include "test_support.hpp"

using namespace sbl;

namespace {

SPomdpModel shape_truth_model() {
  return SPomdpModel({"square", "diamond"}, {"x", "y"},
                     {Sde({0, 1}, {0}), Sde({0, 0}, {0}), Sde({1, 0}, {0}), Sde({1, 1}, {0})},
                     0.99, 1.0);
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace

TEST_CASE("config validation") {
  TrainerConfig cfg;
  CHECK_NOTHROW(validate_config(cfg));
  cfg.confidence_factor = 1.0;
  CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  cfg = TrainerConfig{};
  cfg.max_actions = 0;
  CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  cfg = TrainerConfig{};
  cfg.explore = 1.5;
  CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  cfg = TrainerConfig{};
  CHECK(nav_config(cfg).confidence_factor == 250.0);
  CHECK(nav_config(cfg).localization_threshold == 0.75);
}

TEST_CASE("ground truth and model error") {
  const auto env = test::shipped_env("shape.json");
  auto model = shape_truth_model();
  CHECK(match_model_states(model, env) == std::vector<std::size_t>{0, 1, 2, 3});
  const auto truth = ground_truth_transitions(model, env);
  REQUIRE(truth);
  CHECK(*truth == env_transition_matrix(env));

  const auto err = model_error(model, env);
  REQUIRE(err.mean_abs_error);
  CHECK(*err.mean_abs_error == doctest::Approx(0.3));
  CHECK(err.bijection);
  CHECK(err.abs_differences.size() == 2 * 4 * 4);

  Tensor3 g = *truth;
  for (double& v : g.values()) v = 1.0 + 1e12 * v;
  model.set_gamma(g);
  const auto exact = model_error(model, env);
  CHECK(*exact.mean_abs_error == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(exact.correct);

  const auto det = ground_truth_transitions(model, env.with_noise(1.0, 1.0));
  REQUIRE(det);
  for (double v : det->values()) CHECK((v == 0.0 || v == 1.0));

  const auto coarse = init_model(env.observation_names(), env.action_names(), 0.99, 1.0);
  CHECK(!ground_truth_transitions(coarse, env));
  const auto coarse_err = model_error(coarse, env);
  CHECK(!coarse_err.correct);
  CHECK(!coarse_err.mean_abs_error);
}

TEST_CASE("transition phase termination") {
  const auto env = test::shipped_env("distinct.json");
  SUBCASE("near-trivial confidence target") {
    TrainerConfig cfg;
    cfg.confidence_factor = 1.0001;
    Rng rng(3);
    LearningSession session(env, init_model(env.observation_names(), env.action_names(), 0.99, 1.0),
                            cfg.posterior_rule, rng);
    CHECK(learn_transitions_phase(session, cfg) == PhaseOutcome::TargetMet);
    CHECK(session.actions_taken() < 4 * 2 * 5);
  }
  SUBCASE("cap") {
    TrainerConfig cfg;
    cfg.max_actions = 10;
    Rng rng(3);
    const auto result = learn_environment(env, cfg, rng);
    CHECK(result.trace.outcome == TrainingOutcome::ActionCap);
    CHECK(result.trace.total_actions == 10);
    CHECK(result.trace.steps.size() == 10);
  }
  SUBCASE("two-state chain meets the full target") {
    const auto two = test::two_state_env(0.85, 0.99);
    TrainerConfig cfg;
    Rng rng(4);
    LearningSession session(two, init_model(two.observation_names(), two.action_names(), 0.99, 1.0),
                            cfg.posterior_rule, rng);
    CHECK(learn_transitions_phase(session, cfg) == PhaseOutcome::TargetMet);
    CHECK(min_confidence(session.model()) >= 250.0);
    CHECK(session.actions_taken() < 75000);
  }
}

TEST_CASE("no latent states") {
  const auto env = test::shipped_env("distinct.json");
  TrainerConfig cfg;
  Rng rng(7);
  const auto result = learn_environment(env, cfg, rng);
  CHECK(result.trace.outcome == TrainingOutcome::Converged);
  CHECK(result.trace.splits.empty());
  CHECK(result.model.num_states() == 4);
  CHECK(result.trace.correct_model);
  CHECK(result.trace.final_best_gain < 0.01);

  SUBCASE("patience asks for another evaluation") {
    cfg.patience = 1;
    Rng again(7);
    const auto patient = learn_environment(env, cfg, again);
    REQUIRE(patient.trace.gain_evaluations.size() >= 2);
    const auto& evals = patient.trace.gain_evaluations;
    CHECK(evals[evals.size() - 1].best_gain <= cfg.gain_threshold);
    CHECK(evals[evals.size() - 2].best_gain <= cfg.gain_threshold);
    CHECK(patient.trace.total_actions > result.trace.total_actions);
  }
}

TEST_CASE("trace accounting and determinism") {
  const auto env = test::shipped_env("shape.json");
  TrainerConfig cfg;
  cfg.max_actions = 30000;
  Rng a(11), b(11);
  const auto r1 = learn_environment(env, cfg, a);
  const auto r2 = learn_environment(env, cfg, b);
  const auto& t = r1.trace;
  std::size_t sum = 0;
  for (auto p : t.phase_actions) sum += p;
  CHECK(sum == t.total_actions);
  CHECK(t.total_actions <= cfg.max_actions);
  CHECK(t.phase_actions.size() == t.splits.size() + 1);
  for (std::size_t i = 1; i < t.steps.size(); ++i) CHECK(t.steps[i].step == t.steps[i - 1].step + 1);
  for (std::size_t i = 0; i < t.splits.size(); ++i) CHECK(t.splits[i].new_num_states == 3 + i);

  // Minimum confidence never drops while the model stays the same.
  for (std::size_t i = 1; i < t.steps.size(); ++i) {
    if (t.steps[i].num_model_states == t.steps[i - 1].num_model_states) {
      CHECK(t.steps[i].confidence_min >= t.steps[i - 1].confidence_min - 1e-9);
    }
  }

  REQUIRE(r2.trace.steps.size() == t.steps.size());
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    CHECK(r2.trace.steps[i].action == t.steps[i].action);
    CHECK(r2.trace.steps[i].observation == t.steps[i].observation);
    CHECK(r2.trace.steps[i].confidence_min == t.steps[i].confidence_min);
  }
  CHECK(r2.model.gamma() == r1.model.gamma());
}

TEST_CASE("comparison harness") {
  const auto env = test::shipped_env("shape.json");
  TrainerConfig cfg;
  const auto serial = compare_policies(env, cfg, 2, 40, 1);
  const auto parallel = compare_policies(env, cfg, 2, 40, 2);
  CHECK(serial.baseline.trials.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(serial.navigation.trials[i].total_actions == parallel.navigation.trials[i].total_actions);
    CHECK(serial.baseline.trials[i].total_actions == parallel.baseline.trials[i].total_actions);
    CHECK(serial.baseline.trials[i].seed == 40 + i);
  }
  CHECK(serial.action_reduction ==
        doctest::Approx(1.0 - serial.navigation.mean_actions / serial.baseline.mean_actions));

  const auto arm = summarize_arm(PolicyKind::Baseline, {TrialSummary{1, 100, {100}, 2, {}, false, {}},
                                                        TrialSummary{2, 300, {100, 200}, 3, {}, true, 0.1}});
  CHECK(arm.mean_actions == 200.0);
  CHECK(arm.stddev_actions == 100.0);
  CHECK(arm.success_rate == 0.5);
  REQUIRE(arm.mean_error);
  CHECK(*arm.mean_error == doctest::Approx(0.1));
}

TEST_CASE("shape environment end to end") {
  const auto env = test::shipped_env("shape.json");
  TrainerConfig cfg;
  const auto cmp = compare_policies(env, cfg, 10, 7, jobs());
  int four = 0, accurate = 0;
  for (const auto& t : cmp.navigation.trials) {
    four += t.final_num_states == 4;
    accurate += t.success && t.final_error && *t.final_error < 0.05;
  }
  CHECK(four >= 8);
  CHECK(accurate >= 8);
}
