#pragma once

// Action-sequence generators: the SDE/random-action baseline and the
// confidence-driven navigation policy with its experiment-path tree search.

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "sbl/random.hpp"
#include "sbl/spomdp.hpp"

namespace sbl {

struct AgentContext {
  std::size_t current_observation = 0;
  Belief belief;
  bool performed_experiment = false;
  std::deque<std::size_t> pending_policy;

  /// Unique belief argmax, nullopt when the agent is unlocalized.
  std::optional<std::size_t> current_state() const { return belief.unique_argmax(); }
};

struct NavConfig {
  double confidence_factor = 250.0;
  double localization_threshold = 0.75;
  double explore = 0.5;  // only used by the baseline policy
};

struct BaselineExtension {
  std::vector<std::size_t> actions;
  bool from_sde = false;  // false when replaced by random actions
};

/// Actions of one SDE chosen uniformly among those whose first observation
/// matches the current one; with probability `explore` the same number of
/// uniformly random actions instead. An SDE without actions contributes one
/// random action.
BaselineExtension baseline_policy_extend(const SPomdpModel& model, const AgentContext& ctx,
                                         double explore, Rng& rng);

enum class NavStage { Localize, Experiment, Travel, NoExperimentsReachable };

const char* to_string(NavStage stage);

struct NavDecision {
  NavStage stage = NavStage::NoExperimentsReachable;
  std::vector<std::size_t> actions;
};

/// Normalized entropy of the belief restricted to the states whose first
/// observation is `observation`. The epsilon leak onto contradicted states is
/// dropped before counting nonzero entries.
double localization_entropy(const SPomdpModel& model, const Belief& belief,
                            std::size_t observation);

/// One call of the navigation policy. Updates ctx.performed_experiment.
/// Localizes whenever the belief is spread or its argmax tied. Returns stage
/// NoExperimentsReachable with no actions when travel finds nothing to do;
/// the caller then falls back to the baseline policy.
NavDecision navigation_policy(const SPomdpModel& model, AgentContext& ctx, const NavConfig& cfg,
                              Rng& rng);

/// parent_probability * conf / (confidence_factor - 1).
double node_reward(double parent_probability, double conf, double confidence_factor);

struct PlanNode {
  std::size_t state = 0;
  double reward = 0.0;
  double probability = 1.0;
  std::vector<std::size_t> action_path;
  std::optional<std::size_t> parent;  // index into PlanTree::nodes
  std::size_t depth = 0;
};

struct PlanTree {
  std::vector<PlanNode> nodes;  // nodes[0] is the root, then level order
  std::optional<std::size_t> best;
};

/// Breadth-first tree over most-likely successors rooted at the current
/// state, depth-limited to |M|. Non-confident transitions end a path in an
/// experiment node carrying a reward; confident ones extend it when the
/// destination is new to the path and the current belief is localized.
/// An empty tree (root only) is returned when no (m, a) needs experiments.
PlanTree build_experiment_tree(const SPomdpModel& model, const AgentContext& ctx,
                               const NavConfig& cfg);

/// Actions leading to the highest-reward experiment node, nullopt if none.
std::optional<std::vector<std::size_t>> get_path_to_experiment(const SPomdpModel& model,
                                                               const AgentContext& ctx,
                                                               const NavConfig& cfg);

}  // namespace sbl
