#include "sbl/policy.hpp"

#include <stdexcept>

namespace sbl {

BaselineExtension baseline_policy_extend(const SPomdpModel& model, const AgentContext& ctx,
                                         double explore, Rng& rng) {
  const auto matches = states_matching_observation(model, ctx.current_observation);
  BaselineExtension ext;
  std::size_t length = 1;
  if (!matches.empty()) {
    const Sde& sde = model.sde(matches[uniform_index(rng, matches.size())]);
    if (sde.num_actions() > 0) {
      ext.actions = sde.actions();
      length = sde.num_actions();
      ext.from_sde = true;
    }
  }
  if (!ext.from_sde) {
    ext.actions.push_back(uniform_index(rng, model.num_actions()));
    return ext;
  }
  if (bernoulli(rng, explore)) {
    ext.from_sde = false;
    ext.actions.clear();
    for (std::size_t i = 0; i < length; ++i) {
      ext.actions.push_back(uniform_index(rng, model.num_actions()));
    }
  }
  return ext;
}

const char* to_string(NavStage stage) {
  switch (stage) {
    case NavStage::Localize:
      return "localize";
    case NavStage::Experiment:
      return "experiment";
    case NavStage::Travel:
      return "travel";
    case NavStage::NoExperimentsReachable:
      return "no-experiments-reachable";
  }
  return "unknown";
}

double localization_entropy(const SPomdpModel& model, const Belief& belief,
                            std::size_t observation) {
  std::vector<double> kept;
  double total = 0.0;
  for (std::size_t m : states_matching_observation(model, observation)) {
    kept.push_back(belief.values()[m]);
    total += kept.back();
  }
  if (!(total > 0.0)) return belief_entropy_normalized(belief);
  for (double& v : kept) v /= total;
  return belief_entropy_normalized(Belief(std::move(kept)));
}

NavDecision navigation_policy(const SPomdpModel& model, AgentContext& ctx, const NavConfig& cfg,
                              Rng& rng) {
  const auto current = ctx.current_state();
  const double entropy = localization_entropy(model, ctx.belief, ctx.current_observation);
  NavDecision decision;

  // Localize whenever the belief is spread or its argmax is tied; the random
  // actions only follow an experiment.
  if (entropy > cfg.localization_threshold || !current) {
    decision.stage = NavStage::Localize;
    const auto matches = states_matching_observation(model, ctx.current_observation);
    if (!matches.empty()) {
      decision.actions = model.sde(matches[uniform_index(rng, matches.size())]).actions();
    }
    if (ctx.performed_experiment) {
      for (std::size_t i = 0; i + 1 < model.num_states(); ++i) {
        decision.actions.push_back(uniform_index(rng, model.num_actions()));
      }
      ctx.performed_experiment = false;
    }
    if (decision.actions.empty()) {
      decision.actions.push_back(uniform_index(rng, model.num_actions()));
    }
    return decision;
  }

  for (std::size_t a = 0; a < model.num_actions(); ++a) {
    if (confidence(model, *current, a) < cfg.confidence_factor) {
      decision.stage = NavStage::Experiment;
      decision.actions = {a};
      ctx.performed_experiment = true;
      return decision;
    }
  }

  auto path = get_path_to_experiment(model, ctx, cfg);
  if (!path || path->empty()) {
    decision.stage = NavStage::NoExperimentsReachable;
    return decision;
  }
  decision.stage = NavStage::Travel;
  decision.actions = {path->front()};
  return decision;
}

double node_reward(double parent_probability, double conf, double confidence_factor) {
  if (!(confidence_factor > 1.0)) throw std::invalid_argument("confidence factor must exceed 1");
  return parent_probability * (conf / (confidence_factor - 1.0));
}

PlanTree build_experiment_tree(const SPomdpModel& model, const AgentContext& ctx,
                               const NavConfig& cfg) {
  const auto current = ctx.current_state();
  if (!current) throw std::invalid_argument("experiment tree needs a localized agent");

  const std::size_t n = model.num_states();
  PlanTree tree;
  PlanNode root;
  root.state = *current;
  tree.nodes.push_back(root);

  bool any_needed = false;
  Matrix conf(n, model.num_actions());
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t a = 0; a < model.num_actions(); ++a) {
      conf(m, a) = confidence(model, m, a);
      if (conf(m, a) < cfg.confidence_factor) any_needed = true;
    }
  }
  if (!any_needed) return tree;

  const Tensor3 t = transition_probs(model);
  const bool localized = localization_entropy(model, ctx.belief, ctx.current_observation) <
                         cfg.localization_threshold;

  auto on_path = [&](std::size_t node_index, std::size_t state) {
    for (std::optional<std::size_t> i = node_index; i; i = tree.nodes[*i].parent) {
      if (tree.nodes[*i].state == state) return true;
    }
    return false;
  };

  std::size_t level_begin = 0;
  std::size_t level_end = 1;
  for (std::size_t depth = 1; depth <= n; ++depth) {
    for (std::size_t i = level_begin; i < level_end; ++i) {
      if (tree.nodes[i].reward != 0.0) continue;
      for (std::size_t a = 0; a < model.num_actions(); ++a) {
        const PlanNode& node = tree.nodes[i];
        const auto row = t.row(a, node.state);
        std::size_t dest = 0;
        for (std::size_t k = 1; k < n; ++k) {
          if (row[k] > row[dest]) dest = k;
        }
        PlanNode child;
        child.state = dest;
        child.probability = row[dest] * node.probability;
        child.action_path = node.action_path;
        child.action_path.push_back(a);
        child.parent = i;
        child.depth = depth;

        const double c = conf(node.state, a);
        if (c >= cfg.confidence_factor) {
          if (localized && !on_path(i, dest)) tree.nodes.push_back(std::move(child));
        } else {
          child.reward = node_reward(node.probability, c, cfg.confidence_factor);
          const double reward = child.reward;
          tree.nodes.push_back(std::move(child));
          if (!tree.best || reward > tree.nodes[*tree.best].reward) {
            tree.best = tree.nodes.size() - 1;
          }
        }
      }
    }
    if (tree.nodes.size() == level_end) break;
    level_begin = level_end;
    level_end = tree.nodes.size();
  }
  return tree;
}

std::optional<std::vector<std::size_t>> get_path_to_experiment(const SPomdpModel& model,
                                                               const AgentContext& ctx,
                                                               const NavConfig& cfg) {
  const PlanTree tree = build_experiment_tree(model, ctx, cfg);
  if (!tree.best) return std::nullopt;
  return tree.nodes[*tree.best].action_path;
}

}  // namespace sbl
