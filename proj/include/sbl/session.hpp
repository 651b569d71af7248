#pragma once

// A single agent interacting with a ground-truth environment while learning a
// model. Owns the true environment state, the model, the agent context and
// the short history window used to localize through SDE outcomes.
//
// Every step's posterior update is committed once the window holds enough
// subsequent steps to check any SDE that starts at the step's destination
// (the lag is the longest SDE action count plus `lookahead`). At commit time
// each model state's weight is multiplied by how well the steps that followed
// agree with its SDE: factor 1 per matching outcome, `mismatch_weight` per
// contradicting one, and no factor once the executed actions leave the SDE.
// That factor acts as a prior on the transition likelihood and fades as the
// state's first SDE row gathers counts (`prior_strength` pseudo-counts). The
// destination evidence also carries the backward message of the rest of the
// window under the current model.

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "sbl/env.hpp"
#include "sbl/policy.hpp"
#include "sbl/random.hpp"
#include "sbl/refine.hpp"
#include "sbl/spomdp.hpp"

namespace sbl {

enum class PosteriorRule { Baseline, Argmax };

const char* to_string(PosteriorRule rule);

class LearningSession {
 public:
  LearningSession(const AlphaEpsilonEnv& env, SPomdpModel model, PosteriorRule rule, Rng& rng,
                  double mismatch_weight = 0.1, std::size_t lookahead = 1,
                  double prior_strength = 10.0);

  /// Takes one action in the environment, commits any due posterior update
  /// and refreshes the agent belief.
  EnvStepRecord step(std::size_t action);

  /// Installs a new model (after a split). Uncommitted steps are dropped and
  /// the belief restarts from the current observation.
  void replace_model(SPomdpModel model);

  /// Reshapes each count row like the matching row of `counts` (see
  /// redistribute_rows), keeping its total and so every confidence unchanged.
  void adopt_transitions(const Tensor3& counts);

  const SPomdpModel& model() const { return model_; }
  const AlphaEpsilonEnv& env() const { return env_; }
  AgentContext& context() { return ctx_; }
  const AgentContext& context() const { return ctx_; }
  Rng& rng() { return rng_; }

  std::size_t env_state() const { return env_state_; }
  std::size_t actions_taken() const { return actions_taken_; }
  std::size_t pending_updates() const { return window_.size(); }
  PosteriorRule rule() const { return rule_; }

  /// Every step since the current model was installed, and the observation
  /// seen just before the first of them.
  const std::vector<StepOutcome>& history() const { return history_; }
  std::size_t history_start_observation() const { return history_start_; }

 private:
  std::size_t lag() const { return model_.max_sde_actions() + lookahead_; }
  double sde_agreement(std::size_t m, std::size_t from) const;
  std::vector<double> backward_message(const Tensor3& t, const Matrix& omega,
                                       std::size_t from) const;
  Belief weigh_by_sde(const Belief& b, std::size_t from) const;
  void commit_oldest();
  Belief filtered_belief() const;

  const AlphaEpsilonEnv& env_;
  SPomdpModel model_;
  PosteriorRule rule_;
  Rng& rng_;
  double mismatch_weight_;
  std::size_t lookahead_;
  double prior_strength_;

  std::size_t env_state_ = 0;
  std::size_t actions_taken_ = 0;
  AgentContext ctx_;

  Belief anchor_;             // belief at the time just before window_[0]
  std::deque<StepOutcome> window_;  // uncommitted steps, oldest first
  std::vector<StepOutcome> history_;
  std::size_t history_start_ = 0;
};

/// Executes `sde` from the current position. Fails immediately, without
/// acting, when the current observation differs from the SDE's first one.
/// Otherwise takes every action and succeeds iff each observation matched.
bool run_sde(LearningSession& session, const Sde& sde);

}  // namespace sbl
