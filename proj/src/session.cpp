#include "sbl/session.hpp"

#include <algorithm>
#include <cmath>


namespace sbl {

const char* to_string(PosteriorRule rule) {
  return rule == PosteriorRule::Argmax ? "argmax" : "baseline";
}

LearningSession::LearningSession(const AlphaEpsilonEnv& env, SPomdpModel model,
                                 PosteriorRule rule, Rng& rng, double mismatch_weight,
                                 std::size_t lookahead, double prior_strength)
    : env_(env),
      model_(std::move(model)),
      rule_(rule),
      rng_(rng),
      mismatch_weight_(mismatch_weight),
      lookahead_(lookahead),
      prior_strength_(prior_strength) {
  env_state_ = sample_initial_state(env_, rng_);
  ctx_.current_observation = sample_observation(env_, env_state_, rng_);
  anchor_ = observation_belief(model_, ctx_.current_observation);
  ctx_.belief = anchor_;
  history_start_ = ctx_.current_observation;
}

EnvStepRecord LearningSession::step(std::size_t action) {
  const EnvStepRecord rec = env_step(env_, env_state_, action, rng_);
  env_state_ = rec.next_state;
  ++actions_taken_;
  window_.push_back({action, rec.observation});
  history_.push_back({action, rec.observation});
  while (window_.size() > lag()) commit_oldest();
  ctx_.current_observation = rec.observation;
  ctx_.belief = filtered_belief();
  return rec;
}

void LearningSession::replace_model(SPomdpModel model) {
  model_ = std::move(model);
  window_.clear();
  history_.clear();
  history_start_ = ctx_.current_observation;
  anchor_ = observation_belief(model_, ctx_.current_observation);
  ctx_.belief = anchor_;
  ctx_.pending_policy.clear();
  ctx_.performed_experiment = false;
}

void LearningSession::adopt_transitions(const Tensor3& counts) {
  model_.set_gamma(redistribute_rows(model_.gamma(), counts));
  ctx_.belief = filtered_belief();
}

double LearningSession::sde_agreement(std::size_t m, std::size_t from) const {
  const Sde& sde = model_.sde(m);
  double weight = 1.0;
  for (std::size_t i = 0; i < sde.num_actions(); ++i) {
    const std::size_t idx = from + i;
    if (idx >= window_.size() || window_[idx].action != sde.actions()[i]) break;
    if (window_[idx].observation != sde.outcome_sequence()[i + 1]) weight *= mismatch_weight_;
  }
  if (weight == 1.0) return 1.0;
  // The SDE stands in for the transition likelihood until the row has data.
  const double strength =
      std::min(1.0, prior_strength_ / confidence(model_, m, sde.actions().front()));
  return std::pow(weight, strength);
}

Belief LearningSession::weigh_by_sde(const Belief& b, std::size_t from) const {
  std::vector<double> p(b.values().begin(), b.values().end());
  double total = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    p[m] *= sde_agreement(m, from);
    total += p[m];
  }
  if (!(total > 0.0)) return b;
  for (double& v : p) v /= total;
  return Belief(std::move(p));
}

Belief LearningSession::filtered_belief() const {
  Belief b = weigh_by_sde(anchor_, 0);
  for (std::size_t i = 0; i < window_.size(); ++i) {
    b = belief_update(model_, b, window_[i].action, window_[i].observation);
    b = weigh_by_sde(b, i + 1);
  }
  return b;
}

std::vector<double> LearningSession::backward_message(const Tensor3& t, const Matrix& omega,
                                                       std::size_t from) const {
  const std::size_t n = model_.num_states();
  std::vector<double> beta(n, 1.0);
  std::vector<double> next(n);
  for (std::size_t k = window_.size(); k-- > from;) {
    double total = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const auto row = t.row(window_[k].action, m);
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j) v += row[j] * omega(j, window_[k].observation) * beta[j];
      next[m] = v;
      total += v;
    }
    if (!(total > 0.0)) break;
    for (std::size_t m = 0; m < n; ++m) beta[m] = next[m] / total;
  }
  return beta;
}

void LearningSession::commit_oldest() {
  const StepOutcome oldest = window_.front();
  const Belief source = weigh_by_sde(anchor_, 0);
  const Tensor3 t = transition_probs(model_);
  const std::vector<double> beta = backward_message(t, model_observation_probs(model_), 1);

  std::vector<double> evidence = observation_indicator(model_, oldest.observation);
  for (std::size_t m = 0; m < evidence.size(); ++m) {
    if (evidence[m] != 0.0) evidence[m] *= sde_agreement(m, 1) * beta[m];
  }

  Tensor3 gamma;
  if (rule_ == PosteriorRule::Argmax) {
    // Gate on the source marginal given everything in the window.
    std::vector<double> smoothed(source.values().begin(), source.values().end());
    double total = 0.0;
    for (std::size_t m = 0; m < smoothed.size(); ++m) {
      const auto row = t.row(oldest.action, m);
      double lik = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) lik += row[j] * evidence[j];
      smoothed[m] *= lik;
      total += smoothed[m];
    }
    const Belief gate = total > 0.0 ? Belief(std::move(smoothed)) : source;
    gamma = update_posterior_argmax(model_, gate, oldest.action, evidence);
  } else {
    gamma = update_posterior_baseline(model_, source, oldest.action, evidence);
  }
  model_.set_gamma(std::move(gamma));
  anchor_ = belief_update(model_, source, oldest.action, oldest.observation);
  window_.pop_front();
}

bool run_sde(LearningSession& session, const Sde& sde) {
  if (session.context().current_observation != sde.first_observation()) return false;
  bool matched = true;
  for (std::size_t i = 0; i < sde.num_actions(); ++i) {
    const auto rec = session.step(sde.actions()[i]);
    if (rec.observation != sde.outcome_sequence()[i + 1]) matched = false;
  }
  return matched;
}

}  // namespace sbl
