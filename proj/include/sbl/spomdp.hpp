#pragma once

// Learned sPOMDP model: model states identified by stochastic distinguishing
// experiments (SDEs), Dirichlet transition counts, belief tracking and the
// two transition-posterior update rules.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbl/tensor.hpp"

namespace sbl {

/// Alternating observation/action sequence [o0, a1, o1, ..., ak, ok].
/// Stored as the outcome sequence (k+1 observations) plus the k actions, so
/// the alternation invariant holds by construction.
class Sde {
 public:
  explicit Sde(std::size_t observation) : observations_{observation} {}
  Sde(std::vector<std::size_t> observations, std::vector<std::size_t> actions);

  /// [head_observation, action] followed by `tail`.
  static Sde prefixed(std::size_t head_observation, std::size_t action, const Sde& tail);

  std::size_t first_observation() const { return observations_.front(); }
  const std::vector<std::size_t>& outcome_sequence() const { return observations_; }
  const std::vector<std::size_t>& actions() const { return actions_; }
  std::size_t num_actions() const { return actions_.size(); }

  std::string to_string(const std::vector<std::string>& observation_names,
                        const std::vector<std::string>& action_names) const;

  bool operator==(const Sde&) const = default;

 private:
  std::vector<std::size_t> observations_;
  std::vector<std::size_t> actions_;
};

/// Probability vector over model states.
class Belief {
 public:
  Belief() = default;
  explicit Belief(std::vector<double> probs) : probs_(std::move(probs)) {}

  static Belief uniform(std::size_t n);
  static Belief delta(std::size_t n, std::size_t index);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> values() const { return probs_; }

  /// The index holding the maximum, or nullopt when it is shared.
  std::optional<std::size_t> unique_argmax() const;

  double sum() const;

 private:
  std::vector<double> probs_;
};

class SPomdpModel {
 public:
  /// Throws InvalidModel when the SDE set is empty, has duplicates, or uses
  /// symbols outside the given alphabets.
  SPomdpModel(std::vector<std::string> observations, std::vector<std::string> actions,
              std::vector<Sde> states, double epsilon_model, double learning_rate);

  std::size_t num_states() const { return states_.size(); }
  std::size_t num_actions() const { return actions_.size(); }
  std::size_t num_observations() const { return observations_.size(); }

  const std::vector<std::string>& observation_names() const { return observations_; }
  const std::vector<std::string>& action_names() const { return actions_; }
  const std::vector<Sde>& sdes() const { return states_; }
  const Sde& sde(std::size_t m) const { return states_[m]; }

  double epsilon_model() const { return epsilon_model_; }
  double learning_rate() const { return learning_rate_; }

  /// Dirichlet counts indexed [action][from][to].
  const Tensor3& gamma() const { return gamma_; }

  /// Replaces the counts. Throws InvalidModel on a shape mismatch or an
  /// entry below 1.
  void set_gamma(Tensor3 gamma);

  /// Longest action sequence over all SDEs.
  std::size_t max_sde_actions() const;

 private:
  std::vector<std::string> observations_;
  std::vector<std::string> actions_;
  std::vector<Sde> states_;
  double epsilon_model_;
  double learning_rate_;
  Tensor3 gamma_;
};

/// One model state per observation, all counts at one.
SPomdpModel init_model(std::vector<std::string> observations, std::vector<std::string> actions,
                       double epsilon_model, double learning_rate);

/// Counts normalised per (action, from) row.
Tensor3 transition_probs(const SPomdpModel& model);

/// Epsilon-structured observation rows keyed on each state's first observation.
Matrix model_observation_probs(const SPomdpModel& model);

/// Belief after observing `observation` given only the current observation and
/// a uniform prior over model states.
Belief observation_belief(const SPomdpModel& model, std::size_t observation);

/// Discrete Bayes filter: predict through T[action], correct with Omega.
/// Throws InvariantViolation if no mass survives the correction.
Belief belief_update(const SPomdpModel& model, const Belief& belief, std::size_t action,
                     std::size_t observation);

/// Shannon entropy of the nonzero entries with the logarithm taken in base
/// (number of nonzero entries); 0 for a single nonzero entry.
double belief_entropy_normalized(const Belief& belief);

/// Dirichlet row sum for (m, a) divided by the number of model states.
double confidence(const SPomdpModel& model, std::size_t m, std::size_t action);

/// Smallest confidence over every (m, a) pair.
double min_confidence(const SPomdpModel& model);

/// Model states whose SDE begins with `observation`, in id order.
std::vector<std::size_t> states_matching_observation(const SPomdpModel& model,
                                                     std::size_t observation);

/// 1 for every state whose first observation equals `observation`, else 0.
std::vector<double> observation_indicator(const SPomdpModel& model, std::size_t observation);

// Posterior updates. `belief` is the belief before `action` was taken.
//
// Each raw increment is  evidence(m') * T[a][m][m'] * b(m).  All increments of
// one step are normalised to total 1 and scaled by the learning rate before
// being added to the counts. When every increment is zero the counts are
// returned unchanged.
//
// The observation overloads use the first-observation indicator as evidence.
// The evidence overloads accept any per-destination weight in [0, 1]; the
// trainer uses them to fold SDE outcomes observed after the step into the
// destination weight.

Tensor3 update_posterior_baseline(const SPomdpModel& model, const Belief& belief,
                                  std::size_t action, std::size_t observation);
Tensor3 update_posterior_baseline(const SPomdpModel& model, const Belief& belief,
                                  std::size_t action, std::span<const double> evidence);

/// As the baseline rule, restricted to the row of the unique belief argmax.
/// A tied maximum leaves the counts untouched.
Tensor3 update_posterior_argmax(const SPomdpModel& model, const Belief& belief,
                                std::size_t action, std::size_t observation);
Tensor3 update_posterior_argmax(const SPomdpModel& model, const Belief& belief,
                                std::size_t action, std::span<const double> evidence);

/// Debug/golden snapshot: symbols, SDEs, counts and derived transitions.
nlohmann::json model_snapshot(const SPomdpModel& model);

}  // namespace sbl
