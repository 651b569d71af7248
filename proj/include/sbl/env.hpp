#pragma once

// Ground-truth alpha-epsilon POMDP environments.
//
// Each (state, action) pair has one most-likely successor that receives
// probability alpha; the remaining mass is spread evenly over every other
// state. Observations follow the same pattern with epsilon.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sbl/random.hpp"
#include "sbl/tensor.hpp"

namespace sbl {

/// Row of length `size` with `weight` at `favored_index` and the rest spread
/// uniformly. Throws InvalidEnvironment when size < 2 and
/// DegenerateDistribution when weight does not exceed 1/size (or exceeds 1).
std::vector<double> make_alpha_epsilon_distribution(std::size_t favored_index, std::size_t size,
                                                    double weight);

/// Unvalidated environment description, as read from a config file. State ids,
/// observation names and transition targets may be wrong here; validate_env
/// reports what is.
struct EnvDescription {
  struct StateRecord {
    long long id = 0;
    std::string observation;
    std::map<std::string, long long> transitions;  // action name -> next id
  };

  std::string name;
  double alpha = 0.85;
  double epsilon = 0.99;
  std::vector<std::string> actions;
  std::vector<std::string> observations;
  std::vector<StateRecord> states;
  std::optional<long long> initial_state;
};

/// Every invariant violation in `desc`, one human-readable line each. Empty iff
/// the description can be turned into an AlphaEpsilonEnv.
std::vector<std::string> validate_env(const EnvDescription& desc);

class AlphaEpsilonEnv {
 public:
  /// Throws InvalidEnvironment listing all violations.
  static AlphaEpsilonEnv from_description(const EnvDescription& desc);

  EnvDescription describe() const;

  /// Same structure, different noise levels. Revalidates.
  AlphaEpsilonEnv with_noise(double alpha, double epsilon) const;

  const std::string& name() const { return name_; }
  std::size_t num_states() const { return successor_.size(); }
  std::size_t num_actions() const { return actions_.size(); }
  std::size_t num_observations() const { return observations_.size(); }
  const std::vector<std::string>& action_names() const { return actions_; }
  const std::vector<std::string>& observation_names() const { return observations_; }

  double alpha() const { return alpha_; }
  double epsilon() const { return epsilon_; }
  std::optional<std::size_t> initial_state() const { return initial_state_; }

  std::size_t most_likely_successor(std::size_t state, std::size_t action) const {
    return successor_[state][action];
  }
  std::size_t most_likely_observation(std::size_t state) const { return emission_[state]; }

  std::optional<std::size_t> find_action(std::string_view name) const;
  std::optional<std::size_t> find_observation(std::string_view name) const;

  std::span<const double> transition_row(std::size_t state, std::size_t action) const {
    return transitions_.row(action, state);
  }
  std::span<const double> observation_row(std::size_t state) const {
    return observation_probs_.row(state);
  }

  const Tensor3& transition_tensor() const { return transitions_; }
  const Matrix& observation_matrix() const { return observation_probs_; }

 private:
  AlphaEpsilonEnv() = default;
  void build_distributions();

  std::string name_;
  std::vector<std::string> actions_;
  std::vector<std::string> observations_;
  std::vector<std::vector<std::size_t>> successor_;  // [state][action]
  std::vector<std::size_t> emission_;               // [state]
  double alpha_ = 0.0;
  double epsilon_ = 0.0;
  std::optional<std::size_t> initial_state_;
  Tensor3 transitions_;      // [action][state][next_state]
  Matrix observation_probs_;  // [state][observation]
};

/// Full transition tensor indexed [action][state][next_state].
Tensor3 env_transition_matrix(const AlphaEpsilonEnv& env);

/// Observation matrix indexed [state][observation].
Matrix env_observation_matrix(const AlphaEpsilonEnv& env);

struct EnvStepRecord {
  std::size_t prior_state = 0;
  std::size_t action = 0;
  std::size_t next_state = 0;
  std::size_t observation = 0;

  bool operator==(const EnvStepRecord&) const = default;
};

/// Samples the successor, then an observation emitted by the successor.
/// Throws std::out_of_range on invalid ids.
EnvStepRecord env_step(const AlphaEpsilonEnv& env, std::size_t state, std::size_t action, Rng& rng);

std::size_t sample_observation(const AlphaEpsilonEnv& env, std::size_t state, Rng& rng);

/// The configured initial state, or a uniform draw when none is configured.
std::size_t sample_initial_state(const AlphaEpsilonEnv& env, Rng& rng);

}  // namespace sbl
