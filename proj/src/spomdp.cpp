#include "sbl/spomdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "sbl/env.hpp"
#include "sbl/errors.hpp"

namespace sbl {

// ---------------------------------------------------------------- Sde

Sde::Sde(std::vector<std::size_t> observations, std::vector<std::size_t> actions)
    : observations_(std::move(observations)), actions_(std::move(actions)) {
  if (observations_.size() != actions_.size() + 1) {
    throw InvalidModel("SDE must hold exactly one more observation than actions");
  }
}

Sde Sde::prefixed(std::size_t head_observation, std::size_t action, const Sde& tail) {
  std::vector<std::size_t> obs{head_observation};
  obs.insert(obs.end(), tail.observations_.begin(), tail.observations_.end());
  std::vector<std::size_t> acts{action};
  acts.insert(acts.end(), tail.actions_.begin(), tail.actions_.end());
  return Sde(std::move(obs), std::move(acts));
}

std::string Sde::to_string(const std::vector<std::string>& observation_names,
                           const std::vector<std::string>& action_names) const {
  std::string out = observation_names.at(observations_[0]);
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    out += ' ';
    out += action_names.at(actions_[i]);
    out += ' ';
    out += observation_names.at(observations_[i + 1]);
  }
  return out;
}

// ---------------------------------------------------------------- Belief

Belief Belief::uniform(std::size_t n) {
  return Belief(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Belief Belief::delta(std::size_t n, std::size_t index) {
  std::vector<double> p(n, 0.0);
  p.at(index) = 1.0;
  return Belief(std::move(p));
}

std::optional<std::size_t> Belief::unique_argmax() const {
  if (probs_.empty()) return std::nullopt;
  const auto best = std::max_element(probs_.begin(), probs_.end());
  const double top = *best;
  std::size_t at_top = 0;
  for (double p : probs_) {
    if (top - p <= 1e-12) ++at_top;
  }
  if (at_top != 1) return std::nullopt;
  return static_cast<std::size_t>(best - probs_.begin());
}

double Belief::sum() const { return std::accumulate(probs_.begin(), probs_.end(), 0.0); }

// ---------------------------------------------------------------- SPomdpModel

SPomdpModel::SPomdpModel(std::vector<std::string> observations, std::vector<std::string> actions,
                         std::vector<Sde> states, double epsilon_model, double learning_rate)
    : observations_(std::move(observations)),
      actions_(std::move(actions)),
      states_(std::move(states)),
      epsilon_model_(epsilon_model),
      learning_rate_(learning_rate) {
  if (states_.empty()) throw InvalidModel("model needs at least one state");
  if (actions_.empty()) throw InvalidModel("model needs at least one action");
  if (!(learning_rate_ >= 0.0)) throw InvalidModel("learning rate must be nonnegative");
  for (std::size_t i = 0; i < states_.size(); ++i) {
    for (auto o : states_[i].outcome_sequence()) {
      if (o >= observations_.size()) throw InvalidModel("SDE uses an unknown observation");
    }
    for (auto a : states_[i].actions()) {
      if (a >= actions_.size()) throw InvalidModel("SDE uses an unknown action");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (states_[i] == states_[j]) throw InvalidModel("duplicate SDE in model");
    }
  }
  gamma_ = Tensor3(actions_.size(), states_.size(), states_.size(), 1.0);
}

void SPomdpModel::set_gamma(Tensor3 gamma) {
  if (gamma.dim0() != gamma_.dim0() || gamma.dim1() != gamma_.dim1() ||
      gamma.dim2() != gamma_.dim2()) {
    throw InvalidModel("gamma tensor shape mismatch");
  }
  for (double g : gamma.values()) {
    if (!(g >= 1.0)) throw InvalidModel("gamma entries must stay >= 1");
  }
  gamma_ = std::move(gamma);
}

std::size_t SPomdpModel::max_sde_actions() const {
  std::size_t longest = 0;
  for (const auto& s : states_) longest = std::max(longest, s.num_actions());
  return longest;
}

SPomdpModel init_model(std::vector<std::string> observations, std::vector<std::string> actions,
                       double epsilon_model, double learning_rate) {
  if (observations.size() < 2) {
    throw InvalidModel("at least 2 observations are needed to learn latent structure");
  }
  std::vector<Sde> states;
  for (std::size_t o = 0; o < observations.size(); ++o) states.emplace_back(o);
  return SPomdpModel(std::move(observations), std::move(actions), std::move(states),
                     epsilon_model, learning_rate);
}

// ---------------------------------------------------------------- derived quantities

Tensor3 transition_probs(const SPomdpModel& model) {
  Tensor3 t = model.gamma();
  for (std::size_t a = 0; a < t.dim0(); ++a) {
    for (std::size_t m = 0; m < t.dim1(); ++m) {
      auto row = t.row(a, m);
      const double total = std::accumulate(row.begin(), row.end(), 0.0);
      for (double& v : row) v /= total;
    }
  }
  return t;
}

Matrix model_observation_probs(const SPomdpModel& model) {
  Matrix omega(model.num_states(), model.num_observations());
  for (std::size_t m = 0; m < model.num_states(); ++m) {
    const auto row = make_alpha_epsilon_distribution(model.sde(m).first_observation(),
                                                     model.num_observations(),
                                                     model.epsilon_model());
    std::copy(row.begin(), row.end(), omega.row(m).begin());
  }
  return omega;
}

namespace {

void normalize_or_throw(std::vector<double>& p, const char* what) {
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(total > 0.0)) throw InvariantViolation(what);
  for (double& v : p) v /= total;
}

}  // namespace

Belief observation_belief(const SPomdpModel& model, std::size_t observation) {
  const Matrix omega = model_observation_probs(model);
  std::vector<double> p(model.num_states());
  for (std::size_t m = 0; m < p.size(); ++m) p[m] = omega(m, observation);
  normalize_or_throw(p, "no model state can emit the observation");
  return Belief(std::move(p));
}

Belief belief_update(const SPomdpModel& model, const Belief& belief, std::size_t action,
                     std::size_t observation) {
  const Tensor3 t = transition_probs(model);
  const Matrix omega = model_observation_probs(model);
  const std::size_t n = model.num_states();
  std::vector<double> next(n, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    const double bm = belief[m];
    if (bm == 0.0) continue;
    const auto row = t.row(action, m);
    for (std::size_t k = 0; k < n; ++k) next[k] += row[k] * bm;
  }
  for (std::size_t k = 0; k < n; ++k) next[k] *= omega(k, observation);
  normalize_or_throw(next, "belief update left no probability mass");
  return Belief(std::move(next));
}

double belief_entropy_normalized(const Belief& belief) {
  std::size_t nonzero = 0;
  for (double p : belief.values()) {
    if (p > 0.0) ++nonzero;
  }
  if (nonzero <= 1) return 0.0;
  double h = 0.0;
  for (double p : belief.values()) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h / std::log(static_cast<double>(nonzero));
}

double confidence(const SPomdpModel& model, std::size_t m, std::size_t action) {
  const auto row = model.gamma().row(action, m);
  return std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(model.num_states());
}

double min_confidence(const SPomdpModel& model) {
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < model.num_actions(); ++a) {
    for (std::size_t m = 0; m < model.num_states(); ++m) {
      lowest = std::min(lowest, confidence(model, m, a));
    }
  }
  return lowest;
}

std::vector<std::size_t> states_matching_observation(const SPomdpModel& model,
                                                     std::size_t observation) {
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < model.num_states(); ++m) {
    if (model.sde(m).first_observation() == observation) out.push_back(m);
  }
  return out;
}

std::vector<double> observation_indicator(const SPomdpModel& model, std::size_t observation) {
  std::vector<double> ind(model.num_states(), 0.0);
  for (std::size_t m = 0; m < model.num_states(); ++m) {
    if (model.sde(m).first_observation() == observation) ind[m] = 1.0;
  }
  return ind;
}

// ---------------------------------------------------------------- posterior updates

namespace {

// Shared by both rules so that a delta belief yields bit-identical results.
// `only_source` restricts increments to one source row.
Tensor3 soft_count_update(const SPomdpModel& model, const Belief& belief, std::size_t action,
                          std::span<const double> evidence,
                          std::optional<std::size_t> only_source) {
  const std::size_t n = model.num_states();
  if (belief.size() != n || evidence.size() != n) {
    throw std::invalid_argument("belief/evidence size does not match model");
  }
  Tensor3 gamma = model.gamma();
  if (model.learning_rate() == 0.0) return gamma;

  const Tensor3 t = transition_probs(model);
  Matrix raw(n, n, 0.0);
  double total = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    if (only_source && *only_source != m) continue;
    const double bm = belief[m];
    if (bm == 0.0) continue;
    for (std::size_t k = 0; k < n; ++k) {
      const double inc = evidence[k] * t(action, m, k) * bm;
      raw(m, k) = inc;
      total += inc;
    }
  }
  if (!(total > 0.0)) return gamma;

  const double scale = model.learning_rate() / total;
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t k = 0; k < n; ++k) {
      if (raw(m, k) != 0.0) gamma(action, m, k) += raw(m, k) * scale;
    }
  }
  return gamma;
}

}  // namespace

Tensor3 update_posterior_baseline(const SPomdpModel& model, const Belief& belief,
                                  std::size_t action, std::span<const double> evidence) {
  return soft_count_update(model, belief, action, evidence, std::nullopt);
}

Tensor3 update_posterior_baseline(const SPomdpModel& model, const Belief& belief,
                                  std::size_t action, std::size_t observation) {
  const auto ind = observation_indicator(model, observation);
  return update_posterior_baseline(model, belief, action, ind);
}

Tensor3 update_posterior_argmax(const SPomdpModel& model, const Belief& belief,
                                std::size_t action, std::span<const double> evidence) {
  const auto source = belief.unique_argmax();
  if (!source) return model.gamma();
  return soft_count_update(model, belief, action, evidence, source);
}

Tensor3 update_posterior_argmax(const SPomdpModel& model, const Belief& belief,
                                std::size_t action, std::size_t observation) {
  const auto ind = observation_indicator(model, observation);
  return update_posterior_argmax(model, belief, action, ind);
}

// ---------------------------------------------------------------- snapshot

nlohmann::json model_snapshot(const SPomdpModel& model) {
  using nlohmann::json;
  json doc;
  doc["observations"] = model.observation_names();
  doc["actions"] = model.action_names();
  doc["epsilon_model"] = model.epsilon_model();
  doc["learning_rate"] = model.learning_rate();

  json states = json::array();
  for (std::size_t m = 0; m < model.num_states(); ++m) {
    const auto& sde = model.sde(m);
    json s;
    s["id"] = m;
    s["sde"] = sde.to_string(model.observation_names(), model.action_names());
    json outcome = json::array();
    for (auto o : sde.outcome_sequence()) outcome.push_back(model.observation_names()[o]);
    json acts = json::array();
    for (auto a : sde.actions()) acts.push_back(model.action_names()[a]);
    s["outcome_sequence"] = outcome;
    s["actions"] = acts;
    states.push_back(std::move(s));
  }
  doc["states"] = std::move(states);

  const Tensor3 t = transition_probs(model);
  json gamma = json::object();
  json trans = json::object();
  for (std::size_t a = 0; a < model.num_actions(); ++a) {
    json g_rows = json::array();
    json t_rows = json::array();
    for (std::size_t m = 0; m < model.num_states(); ++m) {
      const auto g = model.gamma().row(a, m);
      const auto p = t.row(a, m);
      g_rows.push_back(std::vector<double>(g.begin(), g.end()));
      t_rows.push_back(std::vector<double>(p.begin(), p.end()));
    }
    gamma[model.action_names()[a]] = std::move(g_rows);
    trans[model.action_names()[a]] = std::move(t_rows);
  }
  doc["gamma"] = std::move(gamma);
  doc["transitions"] = std::move(trans);
  return doc;
}

}  // namespace sbl
