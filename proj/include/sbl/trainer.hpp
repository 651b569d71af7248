#pragma once

// Outer learning loop (learn transitions, evaluate gains, split, repeat),
// model-quality metrics and the baseline-vs-navigation comparison harness.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbl/env.hpp"
#include "sbl/policy.hpp"
#include "sbl/session.hpp"
#include "sbl/split.hpp"
#include "sbl/spomdp.hpp"

namespace sbl {

enum class PolicyKind { Baseline, Navigation };

const char* to_string(PolicyKind kind);

struct TrainerConfig {
  double alpha = 0.85;
  double epsilon = 0.99;
  PolicyKind policy = PolicyKind::Navigation;
  double explore = 0.5;
  double confidence_factor = 250.0;
  double localization_threshold = 0.75;
  std::size_t max_actions = 75000;
  double gain_threshold = 0.01;
  std::size_t patience = 0;
  double learning_rate = 1.0;
  PosteriorRule posterior_rule = PosteriorRule::Argmax;
  std::size_t fallback_eval_interval = 1000;
  // Navigation actions without an experiment before falling back; 0 disables.
  std::size_t nav_stall_limit = 1000;
  std::uint64_t seed = 7;
  // Weight a model state keeps per observed outcome that contradicts its SDE.
  double sde_mismatch_weight = 0.1;
  std::size_t smoothing_lookahead = 1;  // extra committed-update lag beyond the longest SDE
  // Pseudo-count strength of the SDE outcome prior; fades as rows gain data.
  double sde_prior_strength = 10.0;
  // Gains are read from a Baum-Welch refit of the recent history.
  std::size_t refine_sweeps = 300;
  double refine_tolerance = 1e-4;
  std::size_t refine_window = 20000;
  // Write each refit back into the learned rows (row totals are kept).
  bool adopt_refit = true;
  // Actions between refits inside a phase; 0 refits only when gains are scored.
  std::size_t refit_interval = 1000;
  // Standard errors of the entropy estimate subtracted from each gain.
  double gain_significance = 4.0;
  // Delete-a-block jackknife over the history for those errors; 0 disables.
  // Only run when the cheaper delta-method screen already clears the threshold.
  std::size_t jackknife_blocks = 10;
  std::size_t jackknife_sweeps = 30;
  // Share of the confidence factor a pair needs before its gain is trusted.
  double gain_support = 1.0;
  bool record_steps = true;
};

/// Throws std::invalid_argument on out-of-range fields.
void validate_config(const TrainerConfig& cfg);

NavConfig nav_config(const TrainerConfig& cfg);

enum class PolicyMode { Baseline, Localize, Experiment, Travel, Fallback, Patience };

const char* to_string(PolicyMode mode);

struct StepRecord {
  std::size_t step = 0;  // 1-based cumulative action count
  PolicyMode mode = PolicyMode::Baseline;
  std::size_t action = 0;
  std::size_t observation = 0;
  std::size_t num_model_states = 0;
  double confidence_min = 0.0;
  std::optional<double> running_error;
};

struct SplitRecord {
  std::size_t actions_at_split = 0;
  std::size_t new_num_states = 0;
  SplitSpec spec;
  double gain = 0.0;
};

struct GainEvaluation {
  std::size_t at_action = 0;
  std::size_t num_model_states = 0;
  double best_gain = 0.0;
  double raw_best_gain = 0.0;  // plain surrogate on the online counts
};

enum class PhaseOutcome { TargetMet, FallbackTriggered, ActionCap };
enum class TrainingOutcome { Converged, ActionCap };

const char* to_string(PhaseOutcome outcome);
const char* to_string(TrainingOutcome outcome);

struct TrainingTrace {
  std::vector<StepRecord> steps;
  std::vector<SplitRecord> splits;
  std::vector<GainEvaluation> gain_evaluations;
  std::vector<std::size_t> phase_actions;  // actions per model, split by split
  std::size_t total_actions = 0;
  std::size_t rejected_splits = 0;
  std::size_t fallback_switches = 0;
  TrainingOutcome outcome = TrainingOutcome::ActionCap;
  bool correct_model = false;
  std::optional<double> final_error;
  double final_best_gain = 0.0;
};

struct TrainingResult {
  SPomdpModel model;
  TrainingTrace trace;
};

struct GainAssessment {
  SPomdpModel refined;  // model whose transitions the gains were read from
  GainReport gains;
  double raw_best_gain = 0.0;
};

/// Refits the session's model to its recent history and scores every
/// (m, a) pair on the refit, net of the configured significance margin.
GainAssessment assess_gains(const LearningSession& session, const TrainerConfig& cfg);

/// Drives the configured policy (with baseline fallback for navigation) until
/// every (m, a) confidence reaches the confidence factor, a fallback gain
/// evaluation exceeds the gain threshold, or the cumulative action cap is hit.
/// Navigation that goes nav_stall_limit actions without an experiment falls
/// back too. Every refit_interval actions the counts adopt a refit of the
/// phase history. Steps are appended to `trace` when given.
PhaseOutcome learn_transitions_phase(LearningSession& session, const TrainerConfig& cfg,
                                     TrainingTrace* trace = nullptr);

/// Full learning run on `env` (whose alpha/epsilon are used as given).
TrainingResult learn_environment(const AlphaEpsilonEnv& env, const TrainerConfig& cfg, Rng& rng);

/// Environment state each model state's SDE identifies under noise-free
/// execution, provided the identification is a bijection.
std::optional<std::vector<std::size_t>> match_model_states(const SPomdpModel& model,
                                                           const AlphaEpsilonEnv& env);

/// Model-indexed alpha-epsilon transition tensor implied by the environment,
/// or nullopt when no bijection exists.
std::optional<Tensor3> ground_truth_transitions(const SPomdpModel& model,
                                                const AlphaEpsilonEnv& env);

struct ErrorReport {
  std::optional<double> mean_abs_error;  // absent without a bijection
  std::vector<double> abs_differences;   // flattened [a][m][m']
  bool bijection = false;
  bool correct = false;  // bijection and matching most-likely structure
};

ErrorReport model_error(const SPomdpModel& model, const AlphaEpsilonEnv& env);

// ---------------------------------------------------------------- experiments

struct TrialSummary {
  std::uint64_t seed = 0;
  std::size_t total_actions = 0;
  std::vector<std::size_t> phase_actions;
  std::size_t final_num_states = 0;
  TrainingOutcome outcome = TrainingOutcome::ActionCap;
  bool success = false;
  std::optional<double> final_error;
};

/// One trial: environment re-noised to cfg.alpha/cfg.epsilon, generator seeded
/// with `seed`.
TrialSummary run_trial(const AlphaEpsilonEnv& env, TrainerConfig cfg, std::uint64_t seed);

struct ArmSummary {
  PolicyKind policy = PolicyKind::Baseline;
  std::vector<TrialSummary> trials;
  double mean_actions = 0.0;
  double stddev_actions = 0.0;
  std::vector<double> mean_phase_actions;
  std::vector<double> stddev_phase_actions;
  double success_rate = 0.0;
  std::optional<double> mean_error;  // over correct-model trials only
  std::optional<double> stddev_error;
};

struct Comparison {
  ArmSummary baseline;
  ArmSummary navigation;
  /// 1 - navigation mean actions / baseline mean actions.
  double action_reduction = 0.0;
};

/// Runs both arms over seeds base_seed, base_seed + 1, ... The baseline arm
/// uses the baseline policy with the baseline posterior rule, the navigation
/// arm the navigation policy with the argmax rule. `jobs` > 1 runs trials on
/// that many threads; results do not depend on it.
Comparison compare_policies(const AlphaEpsilonEnv& env, const TrainerConfig& cfg_template,
                            std::size_t trials, std::uint64_t base_seed, std::size_t jobs = 1);

ArmSummary summarize_arm(PolicyKind policy, std::vector<TrialSummary> trials);

struct SweepRow {
  double alpha = 0.0;
  PolicyKind policy = PolicyKind::Baseline;
  double success_rate = 0.0;
  std::optional<double> mean_error;
  std::optional<double> stddev_error;
  std::optional<double> ratio;  // success_rate / mean_error
};

std::vector<SweepRow> sweep_alpha(const AlphaEpsilonEnv& env, const TrainerConfig& cfg_template,
                                  const std::vector<double>& alphas, std::size_t trials,
                                  std::uint64_t base_seed, std::size_t jobs = 1);

}  // namespace sbl
