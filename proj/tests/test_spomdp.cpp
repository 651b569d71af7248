#include <doctest.h>

#include <cmath>

#include "sbl/errors.hpp"
#include "sbl/spomdp.hpp"
#include "test_support.hpp"

using namespace sbl;

namespace {

SPomdpModel four_state_model() {
  // States 2 and 3 both begin with observation 1.
  return SPomdpModel({"square", "diamond"}, {"x"},
                     {Sde(0), Sde({0, 0}, {0}), Sde(1), Sde({1, 0}, {0})}, 0.99, 1.0);
}

// Soft-count rule evaluated directly from its definition.
Tensor3 soft_update_oracle(const SPomdpModel& model, const Belief& b, std::size_t a,
                           std::size_t o) {
  const std::size_t n = model.num_states();
  Tensor3 g = model.gamma();
  std::vector<double> raw(n * n, 0.0);
  double total = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    const auto row = model.gamma().row(a, m);
    const double s = test::row_sum(row);
    for (std::size_t k = 0; k < n; ++k) {
      const double ind = model.sde(k).first_observation() == o ? 1.0 : 0.0;
      raw[m * n + k] = ind * (row[k] / s) * b[m];
      total += raw[m * n + k];
    }
  }
  if (total > 0.0) {
    for (std::size_t m = 0; m < n; ++m)
      for (std::size_t k = 0; k < n; ++k)
        g(a, m, k) += model.learning_rate() * raw[m * n + k] / total;
  }
  return g;
}

}  // namespace

TEST_CASE("SDE structure") {
  const Sde s({0, 1, 0}, {1, 0});
  CHECK(s.first_observation() == 0);
  CHECK(s.num_actions() == 2);
  CHECK(s.outcome_sequence().size() == s.actions().size() + 1);
  CHECK_THROWS_AS(Sde({0, 1}, {0, 1}), InvalidModel);
  const Sde p = Sde::prefixed(1, 0, s);
  CHECK(p.outcome_sequence() == std::vector<std::size_t>{1, 0, 1, 0});
  CHECK(p.actions() == std::vector<std::size_t>{0, 1, 0});
  CHECK(s.to_string({"square", "diamond"}, {"x", "y"}) == "square y diamond x square");
}

TEST_CASE("init_model") {
  const auto m = init_model({"square", "diamond"}, {"x", "y"}, 0.99, 1.0);
  CHECK(m.num_states() == 2);
  CHECK(m.sde(0) == Sde(0));
  CHECK(m.sde(1) == Sde(1));
  CHECK(m.gamma().dim0() == 2);
  CHECK(m.gamma().dim1() == 2);
  CHECK(m.gamma().dim2() == 2);
  for (double g : m.gamma().values()) CHECK(g == 1.0);
  const Tensor3 t0 = transition_probs(m);
  for (double t : t0.values()) CHECK(t == 0.5);
  CHECK(init_model({"a", "b", "c"}, {"x"}, 0.99, 1.0).num_states() == 3);
  CHECK_THROWS_AS(init_model({"a"}, {"x"}, 0.99, 1.0), InvalidModel);
  CHECK_THROWS_AS(SPomdpModel({"a", "b"}, {"x"}, {Sde(0), Sde(0)}, 0.99, 1.0), InvalidModel);
  CHECK_THROWS_AS(SPomdpModel({"a", "b"}, {"x"}, {Sde(0), Sde(2)}, 0.99, 1.0), InvalidModel);
}

TEST_CASE("transition_probs and confidence") {
  auto m = four_state_model();
  Tensor3 g = m.gamma();
  g(0, 0, 2) = 3.0;
  g(0, 1, 1) = 1.944;
  g(0, 1, 2) = 1.056;
  m.set_gamma(g);
  const Tensor3 t = transition_probs(m);
  CHECK(t(0, 0, 0) == doctest::Approx(1.0 / 6));
  CHECK(t(0, 0, 2) == doctest::Approx(0.5));
  CHECK(confidence(m, 1, 0) == doctest::Approx(1.25));
  CHECK(confidence(m, 2, 0) == 1.0);
  CHECK(min_confidence(m) == 1.0);
  g(0, 3, 3) = 0.5;
  CHECK_THROWS_AS(m.set_gamma(g), InvalidModel);

  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto r = test::random_model(rng, 6, 100.0);
    const Tensor3 tr = transition_probs(r);
    for (std::size_t a = 0; a < r.num_actions(); ++a)
      for (std::size_t s = 0; s < r.num_states(); ++s)
        CHECK(std::abs(test::row_sum(tr.row(a, s)) - 1.0) <= 1e-12);
  }
}

TEST_CASE("observation model") {
  const auto m = four_state_model();
  const Matrix om = model_observation_probs(m);
  CHECK(om(0, 0) == 0.99);
  CHECK(om(0, 1) == doctest::Approx(0.01));
  CHECK(om(3, 1) == 0.99);
  const auto det = SPomdpModel({"a", "b", "c"}, {"x"}, {Sde(0), Sde(1), Sde(2)}, 1.0, 1.0);
  CHECK(model_observation_probs(det)(1, 1) == 1.0);
  CHECK(model_observation_probs(det)(1, 0) == 0.0);
  const auto three = SPomdpModel({"a", "b", "c"}, {"x"}, {Sde(0), Sde(1), Sde(2)}, 0.99, 1.0);
  CHECK(model_observation_probs(three)(0, 2) == doctest::Approx(0.005));
}

TEST_CASE("belief update") {
  SUBCASE("Bayes correction from a uniform prior") {
    const auto m = init_model({"square", "diamond"}, {"x"}, 0.99, 1.0);
    const Belief b = belief_update(m, Belief::uniform(2), 0, 0);
    CHECK(b[0] == doctest::Approx(0.99));
    CHECK(b[1] == doctest::Approx(0.01));
    const Belief ob = observation_belief(m, 0);
    CHECK(ob[0] == doctest::Approx(0.99));
  }
  SUBCASE("deterministic propagation") {
    auto m = SPomdpModel({"square", "diamond"}, {"x"}, {Sde(0), Sde(1)}, 1.0, 1.0);
    Tensor3 g = m.gamma();
    g(0, 0, 1) = 1e12;
    m.set_gamma(g);
    const Belief b = belief_update(m, Belief::delta(2, 0), 0, 1);
    CHECK(b[0] == 0.0);
    CHECK(b[1] == 1.0);
    const auto mute = SPomdpModel({"a", "b", "c"}, {"x"}, {Sde(0), Sde(1)}, 1.0, 1.0);
    CHECK_THROWS_AS(belief_update(mute, Belief::uniform(2), 0, 2), InvariantViolation);
  }
  SUBCASE("random updates stay normalized") {
    Rng rng(99);
    auto m = test::random_model(rng, 4, 20.0);
    Belief b = Belief::uniform(m.num_states());
    for (int i = 0; i < 10000; ++i) {
      if (i % 1000 == 0) m = test::random_model(rng, 4, 20.0), b = Belief::uniform(m.num_states());
      b = belief_update(m, b, uniform_index(rng, m.num_actions()),
                        uniform_index(rng, m.num_observations()));
      CHECK(std::abs(b.sum() - 1.0) <= 1e-9);
      for (double p : b.values()) CHECK(p >= 0.0);
    }
  }
}

TEST_CASE("belief entropy") {
  CHECK(belief_entropy_normalized(Belief({1, 0, 0, 0})) == 0.0);
  CHECK(belief_entropy_normalized(Belief({0.5, 0.5, 0, 0})) == doctest::Approx(1.0));
  CHECK(belief_entropy_normalized(Belief::uniform(4)) == doctest::Approx(1.0));
  for (std::size_t k = 2; k <= 9; ++k) {
    CHECK(belief_entropy_normalized(Belief::uniform(k)) == doctest::Approx(1.0));
  }
  CHECK(belief_entropy_normalized(Belief({0.9, 0.1})) < 0.5);
  CHECK(Belief({0.5, 0.5, 0.0}).unique_argmax() == std::nullopt);
  CHECK(Belief({0.2, 0.5, 0.3}).unique_argmax() == 1);
}

TEST_CASE("soft-count update, worked cases") {
  SUBCASE("two matches under a uniform row") {
    const auto m = four_state_model();
    // States 0 and 1 both match observation 0 under a uniform row.
    const auto g = update_posterior_baseline(m, Belief::delta(4, 0), 0, 0);
    CHECK(g(0, 0, 0) == doctest::Approx(1.5));
    CHECK(g(0, 0, 1) == doctest::Approx(1.5));
  }
  SUBCASE("one match, raw 0.25 becomes 1") {
    const auto m = SPomdpModel({"a", "b", "c"}, {"x"},
                               {Sde(0), Sde(1), Sde(2), Sde({0, 1}, {0})}, 0.99, 1.0);
    const auto g = update_posterior_baseline(m, Belief::delta(4, 0), 0, 2);
    CHECK(g(0, 0, 2) == doctest::Approx(2.0));
    CHECK(test::row_sum(g.row(0, 0)) == doctest::Approx(5.0));
    const auto ga = update_posterior_argmax(m, Belief({0.7, 0.1, 0.1, 0.1}), 0, 2);
    CHECK(ga(0, 0, 2) == doctest::Approx(2.0));
    for (std::size_t s = 1; s < 4; ++s) CHECK(test::row_sum(ga.row(0, s)) == 4.0);
  }
  SUBCASE("two matches split by transition weight") {
    auto m = four_state_model();
    Tensor3 g = m.gamma();
    g(0, 0, 0) = 1;
    g(0, 0, 1) = 1;
    g(0, 0, 2) = 17;
    g(0, 0, 3) = 1;
    m.set_gamma(g);
    const auto u = update_posterior_baseline(m, Belief::delta(4, 0), 0, 1);
    CHECK(u(0, 0, 2) - 17 == doctest::Approx(0.85 / 0.90));
    CHECK(u(0, 0, 3) - 1 == doctest::Approx(0.05 / 0.90));
  }
  SUBCASE("zero learning rate") {
    const auto m = SPomdpModel({"a", "b"}, {"x"}, {Sde(0), Sde(1)}, 0.99, 0.0);
    CHECK(update_posterior_baseline(m, Belief::uniform(2), 0, 1) == m.gamma());
  }
  SUBCASE("tied argmax leaves counts alone") {
    const auto m = four_state_model();
    CHECK(update_posterior_argmax(m, Belief({0.5, 0.5, 0, 0}), 0, 1) == m.gamma());
  }
}

TEST_CASE("soft-count update properties") {
  Rng rng(2024);
  for (int i = 0; i < 500; ++i) {
    const auto m = test::random_model(rng, 6, 50.0);
    const std::size_t n = m.num_states();
    const std::size_t a = uniform_index(rng, m.num_actions());
    const std::size_t o = uniform_index(rng, m.num_observations());
    const Belief b = test::random_belief(n, rng);

    const Tensor3 base = update_posterior_baseline(m, b, a, o);
    CHECK(test::max_abs_diff(base.values(), soft_update_oracle(m, b, a, o).values()) <= 1e-12);

    const Tensor3 arg = update_posterior_argmax(m, b, a, o);
    double added_base = 0.0, added_arg = 0.0;
    for (std::size_t k = 0; k < base.values().size(); ++k) {
      CHECK(base.values()[k] >= m.gamma().values()[k]);
      CHECK(arg.values()[k] >= m.gamma().values()[k]);
      added_base += base.values()[k] - m.gamma().values()[k];
      added_arg += arg.values()[k] - m.gamma().values()[k];
    }
    CHECK(added_base == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(added_arg == doctest::Approx(1.0).epsilon(1e-9));

    // Only the argmax row moves.
    const std::size_t top = *b.unique_argmax();
    for (std::size_t s = 0; s < n; ++s) {
      if (s == top) continue;
      for (std::size_t k = 0; k < n; ++k) CHECK(arg(a, s, k) == m.gamma()(a, s, k));
    }
  }
}

TEST_CASE("argmax updates learn a two-state chain") {
  const auto env = test::two_state_env(0.85, 0.99);
  auto model = init_model(env.observation_names(), env.action_names(), 0.99, 1.0);
  Rng rng(17);
  std::size_t state = 0;
  std::size_t obs = sample_observation(env, state, rng);
  Belief b = observation_belief(model, obs);
  for (int i = 0; i < 10000; ++i) {
    const auto rec = env_step(env, state, 0, rng);
    model.set_gamma(update_posterior_argmax(model, b, 0, rec.observation));
    b = belief_update(model, b, 0, rec.observation);
    state = rec.next_state;
  }
  const Tensor3 t = transition_probs(model);
  CHECK(t(0, 0, 1) >= 0.80);
  CHECK(t(0, 0, 1) <= 0.90);
  CHECK(t(0, 1, 0) >= 0.80);
  CHECK(t(0, 1, 0) <= 0.90);
}

TEST_CASE("states matching an observation") {
  const auto m = four_state_model();
  CHECK(states_matching_observation(m, 0) == std::vector<std::size_t>{0, 1});
  CHECK(states_matching_observation(m, 1) == std::vector<std::size_t>{2, 3});
  CHECK(observation_indicator(m, 1) == std::vector<double>{0, 0, 1, 1});
  CHECK(states_matching_observation(init_model({"a", "b"}, {"x"}, 0.99, 1.0), 0).size() == 1);
}

TEST_CASE("model snapshot") {
  const auto m = four_state_model();
  const auto doc = model_snapshot(m);
  CHECK(doc["states"].size() == 4);
  CHECK(doc["states"][1]["outcome_sequence"].size() == 2);
  CHECK(doc.contains("gamma"));
}
