#include "sbl/env.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sbl/errors.hpp"

namespace sbl {

std::vector<double> make_alpha_epsilon_distribution(std::size_t favored_index, std::size_t size,
                                                    double weight) {
  if (size < 2) {
    throw InvalidEnvironment("alpha-epsilon distribution needs at least 2 entries");
  }
  if (!(weight > 1.0 / static_cast<double>(size)) || weight > 1.0) {
    std::ostringstream msg;
    msg << "weight " << weight << " must lie in (1/" << size << ", 1]";
    throw DegenerateDistribution(msg.str());
  }
  if (favored_index >= size) {
    throw std::out_of_range("favored index outside distribution");
  }
  std::vector<double> row(size, (1.0 - weight) / static_cast<double>(size - 1));
  row[favored_index] = weight;
  return row;
}

namespace {

void check_symbols(const std::vector<std::string>& symbols, std::string_view kind,
                   std::vector<std::string>& out) {
  std::set<std::string> seen;
  for (const auto& s : symbols) {
    if (s.empty()) {
      out.push_back(std::string(kind) + " with empty name");
    } else if (!seen.insert(s).second) {
      out.push_back("duplicate " + std::string(kind) + " '" + s + "'");
    }
  }
}

}  // namespace

std::vector<std::string> validate_env(const EnvDescription& desc) {
  std::vector<std::string> violations;
  const std::size_t n = desc.states.size();

  if (desc.actions.empty()) violations.emplace_back("no actions defined");
  if (desc.observations.size() < 2) violations.emplace_back("fewer than 2 observations defined");
  if (n < 2) violations.emplace_back("fewer than 2 states defined");
  check_symbols(desc.actions, "action", violations);
  check_symbols(desc.observations, "observation", violations);

  if (n >= 2 && !(desc.alpha > 1.0 / static_cast<double>(n) && desc.alpha <= 1.0)) {
    std::ostringstream msg;
    msg << "alpha " << desc.alpha << " outside (1/" << n << ", 1]";
    violations.push_back(msg.str());
  }
  const std::size_t num_obs = desc.observations.size();
  if (num_obs >= 2 &&
      !(desc.epsilon > 1.0 / static_cast<double>(num_obs) && desc.epsilon <= 1.0)) {
    std::ostringstream msg;
    msg << "epsilon " << desc.epsilon << " outside (1/" << num_obs << ", 1]";
    violations.push_back(msg.str());
  }

  std::vector<bool> id_seen(n, false);
  const std::set<std::string> obs_names(desc.observations.begin(), desc.observations.end());
  const std::set<std::string> action_names(desc.actions.begin(), desc.actions.end());
  for (const auto& state : desc.states) {
    const std::string label = "state " + std::to_string(state.id);
    if (state.id < 0 || static_cast<std::size_t>(state.id) >= n) {
      violations.push_back(label + ": id outside 0.." + std::to_string(n == 0 ? 0 : n - 1));
    } else if (id_seen[static_cast<std::size_t>(state.id)]) {
      violations.push_back(label + ": duplicate id");
    } else {
      id_seen[static_cast<std::size_t>(state.id)] = true;
    }
    if (!obs_names.contains(state.observation)) {
      violations.push_back(label + ": unknown observation '" + state.observation + "'");
    }
    for (const auto& action : desc.actions) {
      auto it = state.transitions.find(action);
      if (it == state.transitions.end()) {
        violations.push_back(label + ": missing transition for action '" + action + "'");
      } else if (it->second < 0 || static_cast<std::size_t>(it->second) >= n) {
        violations.push_back(label + ": action '" + action + "' leads to unknown state " +
                             std::to_string(it->second));
      }
    }
    for (const auto& [action, target] : state.transitions) {
      if (!action_names.contains(action)) {
        violations.push_back(label + ": transition on unknown action '" + action + "'");
      }
    }
  }
  if (desc.initial_state &&
      (*desc.initial_state < 0 || static_cast<std::size_t>(*desc.initial_state) >= n)) {
    violations.push_back("initial_state " + std::to_string(*desc.initial_state) +
                         " is not a state id");
  }
  return violations;
}

AlphaEpsilonEnv AlphaEpsilonEnv::from_description(const EnvDescription& desc) {
  auto violations = validate_env(desc);
  if (!violations.empty()) {
    std::string msg = "invalid environment";
    for (const auto& v : violations) msg += "\n  " + v;
    throw InvalidEnvironment(msg);
  }

  AlphaEpsilonEnv env;
  env.name_ = desc.name;
  env.actions_ = desc.actions;
  env.observations_ = desc.observations;
  env.alpha_ = desc.alpha;
  env.epsilon_ = desc.epsilon;
  if (desc.initial_state) env.initial_state_ = static_cast<std::size_t>(*desc.initial_state);

  const std::size_t n = desc.states.size();
  env.successor_.assign(n, std::vector<std::size_t>(desc.actions.size(), 0));
  env.emission_.assign(n, 0);
  for (const auto& state : desc.states) {
    const auto s = static_cast<std::size_t>(state.id);
    env.emission_[s] = *env.find_observation(state.observation);
    for (std::size_t a = 0; a < desc.actions.size(); ++a) {
      env.successor_[s][a] = static_cast<std::size_t>(state.transitions.at(desc.actions[a]));
    }
  }
  env.build_distributions();
  return env;
}

void AlphaEpsilonEnv::build_distributions() {
  const std::size_t n = num_states();
  transitions_ = Tensor3(num_actions(), n, n);
  for (std::size_t a = 0; a < num_actions(); ++a) {
    for (std::size_t s = 0; s < n; ++s) {
      const auto row = make_alpha_epsilon_distribution(successor_[s][a], n, alpha_);
      std::copy(row.begin(), row.end(), transitions_.row(a, s).begin());
    }
  }
  observation_probs_ = Matrix(n, num_observations());
  for (std::size_t s = 0; s < n; ++s) {
    const auto row = make_alpha_epsilon_distribution(emission_[s], num_observations(), epsilon_);
    std::copy(row.begin(), row.end(), observation_probs_.row(s).begin());
  }
}

EnvDescription AlphaEpsilonEnv::describe() const {
  EnvDescription desc;
  desc.name = name_;
  desc.alpha = alpha_;
  desc.epsilon = epsilon_;
  desc.actions = actions_;
  desc.observations = observations_;
  if (initial_state_) desc.initial_state = static_cast<long long>(*initial_state_);
  for (std::size_t s = 0; s < num_states(); ++s) {
    EnvDescription::StateRecord rec;
    rec.id = static_cast<long long>(s);
    rec.observation = observations_[emission_[s]];
    for (std::size_t a = 0; a < num_actions(); ++a) {
      rec.transitions[actions_[a]] = static_cast<long long>(successor_[s][a]);
    }
    desc.states.push_back(std::move(rec));
  }
  return desc;
}

AlphaEpsilonEnv AlphaEpsilonEnv::with_noise(double alpha, double epsilon) const {
  auto desc = describe();
  desc.alpha = alpha;
  desc.epsilon = epsilon;
  return from_description(desc);
}

std::optional<std::size_t> AlphaEpsilonEnv::find_action(std::string_view name) const {
  auto it = std::find(actions_.begin(), actions_.end(), name);
  if (it == actions_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - actions_.begin());
}

std::optional<std::size_t> AlphaEpsilonEnv::find_observation(std::string_view name) const {
  auto it = std::find(observations_.begin(), observations_.end(), name);
  if (it == observations_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - observations_.begin());
}

Tensor3 env_transition_matrix(const AlphaEpsilonEnv& env) { return env.transition_tensor(); }

Matrix env_observation_matrix(const AlphaEpsilonEnv& env) { return env.observation_matrix(); }

std::size_t sample_observation(const AlphaEpsilonEnv& env, std::size_t state, Rng& rng) {
  if (state >= env.num_states()) throw std::out_of_range("state id outside environment");
  return sample_categorical(env.observation_row(state), rng);
}

EnvStepRecord env_step(const AlphaEpsilonEnv& env, std::size_t state, std::size_t action,
                       Rng& rng) {
  if (state >= env.num_states()) throw std::out_of_range("state id outside environment");
  if (action >= env.num_actions()) throw std::out_of_range("action id outside environment");
  EnvStepRecord rec;
  rec.prior_state = state;
  rec.action = action;
  rec.next_state = sample_categorical(env.transition_row(state, action), rng);
  rec.observation = sample_categorical(env.observation_row(rec.next_state), rng);
  return rec;
}

std::size_t sample_initial_state(const AlphaEpsilonEnv& env, Rng& rng) {
  if (env.initial_state()) return *env.initial_state();
  return uniform_index(rng, env.num_states());
}

}  // namespace sbl
