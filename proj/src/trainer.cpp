#include "sbl/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "sbl/errors.hpp"

namespace sbl {

const char* to_string(PolicyKind kind) {
  return kind == PolicyKind::Navigation ? "navigation" : "baseline";
}

const char* to_string(PolicyMode mode) {
  switch (mode) {
    case PolicyMode::Baseline:
      return "baseline";
    case PolicyMode::Localize:
      return "localize";
    case PolicyMode::Experiment:
      return "experiment";
    case PolicyMode::Travel:
      return "travel";
    case PolicyMode::Fallback:
      return "fallback";
    case PolicyMode::Patience:
      return "patience";
  }
  return "unknown";
}

const char* to_string(PhaseOutcome outcome) {
  switch (outcome) {
    case PhaseOutcome::TargetMet:
      return "target-met";
    case PhaseOutcome::FallbackTriggered:
      return "fallback-triggered";
    case PhaseOutcome::ActionCap:
      return "action-cap";
  }
  return "unknown";
}

const char* to_string(TrainingOutcome outcome) {
  return outcome == TrainingOutcome::Converged ? "converged" : "action-cap";
}

void validate_config(const TrainerConfig& cfg) {
  auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!probability(cfg.alpha) || !probability(cfg.epsilon)) {
    throw std::invalid_argument("alpha and epsilon must be probabilities");
  }
  if (!probability(cfg.explore)) throw std::invalid_argument("explore must be a probability");
  if (!(cfg.confidence_factor > 1.0)) {
    throw std::invalid_argument("confidence factor must exceed 1");
  }
  if (!probability(cfg.localization_threshold)) {
    throw std::invalid_argument("localization threshold must lie in [0, 1]");
  }
  if (cfg.max_actions < 1) throw std::invalid_argument("max actions must be at least 1");
  if (!(cfg.gain_threshold >= 0.0)) throw std::invalid_argument("gain threshold must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (cfg.fallback_eval_interval < 1) {
    throw std::invalid_argument("fallback evaluation interval must be at least 1");
  }
  if (!(cfg.sde_mismatch_weight >= 0.0 && cfg.sde_mismatch_weight <= 1.0)) {
    throw std::invalid_argument("SDE mismatch weight must lie in [0, 1]");
  }
  if (!(cfg.sde_prior_strength >= 0.0)) {
    throw std::invalid_argument("SDE prior strength must be >= 0");
  }
  if (!(cfg.gain_significance >= 0.0)) {
    throw std::invalid_argument("gain significance must be >= 0");
  }
  if (!(cfg.gain_support >= 0.0)) {
    throw std::invalid_argument("gain support must be >= 0");
  }
}

NavConfig nav_config(const TrainerConfig& cfg) {
  return NavConfig{cfg.confidence_factor, cfg.localization_threshold, cfg.explore};
}

// ---------------------------------------------------------------- ground truth

std::optional<std::vector<std::size_t>> match_model_states(const SPomdpModel& model,
                                                           const AlphaEpsilonEnv& env) {
  if (model.num_states() != env.num_states()) return std::nullopt;
  std::vector<std::size_t> mapping(model.num_states());
  std::vector<bool> taken(env.num_states(), false);
  for (std::size_t m = 0; m < model.num_states(); ++m) {
    const Sde& sde = model.sde(m);
    std::optional<std::size_t> found;
    for (std::size_t s = 0; s < env.num_states(); ++s) {
      std::size_t cur = s;
      bool ok = env.most_likely_observation(cur) == sde.first_observation();
      for (std::size_t i = 0; ok && i < sde.num_actions(); ++i) {
        cur = env.most_likely_successor(cur, sde.actions()[i]);
        ok = env.most_likely_observation(cur) == sde.outcome_sequence()[i + 1];
      }
      if (!ok) continue;
      if (found) return std::nullopt;  // SDE does not single out one state
      found = s;
    }
    if (!found || taken[*found]) return std::nullopt;
    taken[*found] = true;
    mapping[m] = *found;
  }
  return mapping;
}

namespace {

Tensor3 induced_transitions(const SPomdpModel& model, const AlphaEpsilonEnv& env,
                            const std::vector<std::size_t>& mapping) {
  const std::size_t n = model.num_states();
  std::vector<std::size_t> inverse(n);
  for (std::size_t m = 0; m < n; ++m) inverse[mapping[m]] = m;
  Tensor3 t(model.num_actions(), n, n);
  for (std::size_t a = 0; a < model.num_actions(); ++a) {
    for (std::size_t m = 0; m < n; ++m) {
      const std::size_t target = inverse[env.most_likely_successor(mapping[m], a)];
      const auto row = make_alpha_epsilon_distribution(target, n, env.alpha());
      std::copy(row.begin(), row.end(), t.row(a, m).begin());
    }
  }
  return t;
}

double mean_abs_difference(const Tensor3& x, const Tensor3& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.values().size(); ++i) {
    total += std::abs(x.values()[i] - y.values()[i]);
  }
  return total / static_cast<double>(x.values().size());
}

}  // namespace

std::optional<Tensor3> ground_truth_transitions(const SPomdpModel& model,
                                                const AlphaEpsilonEnv& env) {
  const auto mapping = match_model_states(model, env);
  if (!mapping) return std::nullopt;
  return induced_transitions(model, env, *mapping);
}

ErrorReport model_error(const SPomdpModel& model, const AlphaEpsilonEnv& env) {
  ErrorReport report;
  const auto mapping = match_model_states(model, env);
  if (!mapping) return report;
  report.bijection = true;

  const Tensor3 theory = induced_transitions(model, env, *mapping);
  const Tensor3 learned = transition_probs(model);
  report.abs_differences.reserve(theory.values().size());
  for (std::size_t i = 0; i < theory.values().size(); ++i) {
    report.abs_differences.push_back(std::abs(learned.values()[i] - theory.values()[i]));
  }
  report.mean_abs_error = mean_abs_difference(learned, theory);

  bool structure = true;
  for (std::size_t a = 0; a < model.num_actions() && structure; ++a) {
    for (std::size_t m = 0; m < model.num_states() && structure; ++m) {
      const auto lrow = learned.row(a, m);
      const auto trow = theory.row(a, m);
      const auto lmax = std::max_element(lrow.begin(), lrow.end()) - lrow.begin();
      const auto tmax = std::max_element(trow.begin(), trow.end()) - trow.begin();
      structure = lmax == tmax;
    }
  }
  report.correct = structure;
  return report;
}

// ---------------------------------------------------------------- learning loop

namespace {

// Theoretical transitions for the model currently held by a session; the SDE
// set is fixed within a phase so this is computed once per phase.
class ErrorTracker {
 public:
  ErrorTracker(const SPomdpModel& model, const AlphaEpsilonEnv& env)
      : theory_(ground_truth_transitions(model, env)) {}

  std::optional<double> error(const SPomdpModel& model) const {
    if (!theory_) return std::nullopt;
    return mean_abs_difference(transition_probs(model), *theory_);
  }

 private:
  std::optional<Tensor3> theory_;
};

void take_action(LearningSession& session, std::size_t action, PolicyMode mode,
                 TrainingTrace* trace, const ErrorTracker& tracker, bool record) {
  const auto rec = session.step(action);
  if (!trace) return;
  trace->total_actions = session.actions_taken();
  if (!record) return;
  StepRecord step;
  step.step = session.actions_taken();
  step.mode = mode;
  step.action = action;
  step.observation = rec.observation;
  step.num_model_states = session.model().num_states();
  step.confidence_min = min_confidence(session.model());
  step.running_error = tracker.error(session.model());
  trace->steps.push_back(step);
}

PolicyMode mode_for(NavStage stage) {
  switch (stage) {
    case NavStage::Localize:
      return PolicyMode::Localize;
    case NavStage::Experiment:
      return PolicyMode::Experiment;
    default:
      return PolicyMode::Travel;
  }
}

// Baseline-policy exploration for a fixed number of actions (or until the cap).
// Returns false when the cap was reached.
bool explore_for(LearningSession& session, const TrainerConfig& cfg, std::size_t actions,
                 PolicyMode mode, TrainingTrace* trace) {
  const ErrorTracker tracker(session.model(), session.env());
  auto& ctx = session.context();
  ctx.pending_policy.clear();
  for (std::size_t done = 0; done < actions; ++done) {
    if (session.actions_taken() >= cfg.max_actions) return false;
    if (ctx.pending_policy.empty()) {
      const auto ext = baseline_policy_extend(session.model(), ctx, cfg.explore, session.rng());
      ctx.pending_policy.assign(ext.actions.begin(), ext.actions.end());
    }
    const std::size_t a = ctx.pending_policy.front();
    ctx.pending_policy.pop_front();
    take_action(session, a, mode, trace, tracker, cfg.record_steps);
  }
  ctx.pending_policy.clear();
  return session.actions_taken() < cfg.max_actions;
}

}  // namespace

namespace {

std::pair<std::size_t, std::size_t> refine_range(const LearningSession& session,
                                                 const TrainerConfig& cfg) {
  const auto& history = session.history();
  if (history.size() <= cfg.refine_window) return {0, session.history_start_observation()};
  const std::size_t start = history.size() - cfg.refine_window;
  return {start, history[start - 1].observation};
}

SPomdpModel refined_model(const LearningSession& session, const TrainerConfig& cfg) {
  const auto& history = session.history();
  const auto [start, start_obs] = refine_range(session, cfg);
  const std::span<const StepOutcome> recent(history.data() + start, history.size() - start);
  return refine_transitions(session.model(), start_obs, recent, cfg.refine_sweeps,
                            cfg.refine_tolerance);
}

// Jackknife standard error of each row entropy, refitting from `full` with
// one contiguous block of history held out at a time.
Matrix jackknife_entropy_se(const LearningSession& session, const TrainerConfig& cfg,
                            const SPomdpModel& full) {
  const std::size_t n = full.num_states();
  const std::size_t na = full.num_actions();
  Matrix se(n, na);
  const std::size_t k_blocks = cfg.jackknife_blocks;
  if (k_blocks < 2) return se;
  const auto& history = session.history();
  const auto [start, start_obs] = refine_range(session, cfg);
  const std::size_t len = history.size() - start;
  if (len < k_blocks) return se;

  std::vector<Matrix> h(k_blocks, Matrix(n, na));
  for (std::size_t k = 0; k < k_blocks; ++k) {
    const std::size_t b0 = start + len * k / k_blocks;
    const std::size_t b1 = start + len * (k + 1) / k_blocks;
    std::vector<HistorySegment> segs;
    if (b0 > start) segs.push_back({start_obs, {history.data() + start, b0 - start}});
    if (b1 < history.size()) {
      segs.push_back({history[b1 - 1].observation, {history.data() + b1, history.size() - b1}});
    }
    const Tensor3 t =
        transition_probs(refine_transitions(full, segs, cfg.jackknife_sweeps, cfg.refine_tolerance));
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t a = 0; a < na; ++a) h[k](m, a) = entropy_bits(t.row(a, m));
    }
  }
  const double kd = static_cast<double>(k_blocks);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t a = 0; a < na; ++a) {
      double mean = 0.0;
      for (const auto& hk : h) mean += hk(m, a);
      mean /= kd;
      double var = 0.0;
      for (const auto& hk : h) var += (hk(m, a) - mean) * (hk(m, a) - mean);
      se(m, a) = std::sqrt(var * (kd - 1.0) / kd);
    }
  }
  return se;
}

void refit(LearningSession& session, const TrainerConfig& cfg) {
  session.adopt_transitions(refined_model(session, cfg).gamma());
}

}  // namespace

GainAssessment assess_gains(const LearningSession& session, const TrainerConfig& cfg) {
  SPomdpModel refined = refined_model(session, cfg);
  const double min_conf = cfg.gain_support * cfg.confidence_factor;
  GainReport gains = compute_gains(refined, cfg.alpha, cfg.gain_significance, min_conf);
  if (gains.best_gain > cfg.gain_threshold && cfg.jackknife_blocks >= 2) {
    const Matrix se = jackknife_entropy_se(session, cfg, refined);
    gains = compute_gains(refined, cfg.alpha, cfg.gain_significance, min_conf, &se);
  }
  const double raw = compute_gains(session.model(), cfg.alpha).best_gain;
  return GainAssessment{std::move(refined), std::move(gains), raw};
}

namespace {

GainAssessment assess_and_adopt(LearningSession& session, const TrainerConfig& cfg) {
  GainAssessment assessment = assess_gains(session, cfg);
  if (cfg.adopt_refit) session.adopt_transitions(assessment.refined.gamma());
  return assessment;
}

}  // namespace

PhaseOutcome learn_transitions_phase(LearningSession& session, const TrainerConfig& cfg,
                                     TrainingTrace* trace) {
  const NavConfig nav = nav_config(cfg);
  const ErrorTracker tracker(session.model(), session.env());
  auto& ctx = session.context();
  ctx.pending_policy.clear();
  bool fallback = false;
  std::size_t since_eval = 0;
  std::size_t since_experiment = 0;
  std::size_t since_refit = 0;
  PolicyMode mode = PolicyMode::Baseline;

  while (true) {
    if (min_confidence(session.model()) >= cfg.confidence_factor) return PhaseOutcome::TargetMet;
    if (session.actions_taken() >= cfg.max_actions) return PhaseOutcome::ActionCap;

    if (ctx.pending_policy.empty()) {
      if (cfg.policy == PolicyKind::Baseline || fallback) {
        const auto ext = baseline_policy_extend(session.model(), ctx, cfg.explore, session.rng());
        ctx.pending_policy.assign(ext.actions.begin(), ext.actions.end());
        mode = fallback ? PolicyMode::Fallback : PolicyMode::Baseline;
      } else {
        const auto decision = navigation_policy(session.model(), ctx, nav, session.rng());
        // A planned path that keeps missing its target counts as unreachable.
        const bool stalled = cfg.nav_stall_limit > 0 && since_experiment >= cfg.nav_stall_limit;
        if (decision.stage == NavStage::NoExperimentsReachable || stalled) {
          fallback = true;
          if (trace) ++trace->fallback_switches;
          continue;
        }
        ctx.pending_policy.assign(decision.actions.begin(), decision.actions.end());
        mode = mode_for(decision.stage);
        if (decision.stage == NavStage::Experiment) since_experiment = 0;
      }
    }

    const std::size_t a = ctx.pending_policy.front();
    ctx.pending_policy.pop_front();
    take_action(session, a, mode, trace, tracker, cfg.record_steps);
    ++since_experiment;
    if (cfg.adopt_refit && cfg.refit_interval > 0 && ++since_refit >= cfg.refit_interval) {
      since_refit = 0;
      refit(session, cfg);
    }

    if (fallback && ++since_eval >= cfg.fallback_eval_interval) {
      since_eval = 0;
      const auto assessment = assess_and_adopt(session, cfg);
      if (trace) {
        trace->gain_evaluations.push_back({session.actions_taken(), session.model().num_states(),
                                           assessment.gains.best_gain, assessment.raw_best_gain});
      }
      if (assessment.gains.best_gain > cfg.gain_threshold) {
        ctx.pending_policy.clear();
        return PhaseOutcome::FallbackTriggered;
      }
    }
  }
}

namespace {

// Tries candidate pairs above the threshold in descending gain order.
std::optional<std::pair<SPomdpModel, SplitRecord>> try_split(const SPomdpModel& model,
                                                             const GainReport& gains,
                                                             double threshold) {
  for (const auto& entry : gains.ranked()) {
    if (!(entry.gain > threshold)) break;
    const SplitSpec spec = make_split_spec(model, entry.state, entry.action);
    try {
      SPomdpModel next = split_model(model, spec);
      SplitRecord rec;
      rec.new_num_states = next.num_states();
      rec.spec = spec;
      rec.gain = entry.gain;
      return std::make_pair(std::move(next), rec);
    } catch (const SplitRejected&) {
    }
  }
  return std::nullopt;
}

}  // namespace

TrainingResult learn_environment(const AlphaEpsilonEnv& env, const TrainerConfig& cfg, Rng& rng) {
  validate_config(cfg);
  LearningSession session(env,
                          init_model(env.observation_names(), env.action_names(), cfg.epsilon,
                                     cfg.learning_rate),
                          cfg.posterior_rule, rng, cfg.sde_mismatch_weight,
                          cfg.smoothing_lookahead, cfg.sde_prior_strength);
  TrainingTrace trace;
  std::size_t phase_start = 0;
  std::size_t below_threshold = 0;
  bool run_phase = true;

  while (true) {
    if (run_phase && learn_transitions_phase(session, cfg, &trace) == PhaseOutcome::ActionCap) {
      trace.outcome = TrainingOutcome::ActionCap;
      break;
    }
    run_phase = true;

    const auto assessment = assess_and_adopt(session, cfg);
    const GainReport& gains = assessment.gains;
    trace.gain_evaluations.push_back({session.actions_taken(), session.model().num_states(),
                                      gains.best_gain, assessment.raw_best_gain});

    if (gains.best_gain > cfg.gain_threshold) {
      below_threshold = 0;
      if (auto split = try_split(assessment.refined, gains, cfg.gain_threshold)) {
        split->second.actions_at_split = session.actions_taken();
        trace.splits.push_back(split->second);
        trace.phase_actions.push_back(session.actions_taken() - phase_start);
        phase_start = session.actions_taken();
        session.replace_model(std::move(split->first));
        continue;
      }
      ++trace.rejected_splits;
    } else if (++below_threshold > cfg.patience) {
      trace.outcome = TrainingOutcome::Converged;
      break;
    }

    // Rejected split or patience left: keep exploring, then re-evaluate.
    const PolicyMode mode =
        gains.best_gain > cfg.gain_threshold ? PolicyMode::Fallback : PolicyMode::Patience;
    if (!explore_for(session, cfg, cfg.fallback_eval_interval, mode, &trace)) {
      trace.outcome = TrainingOutcome::ActionCap;
      break;
    }
    run_phase = false;
  }

  trace.total_actions = session.actions_taken();
  trace.phase_actions.push_back(session.actions_taken() - phase_start);
  trace.final_best_gain = trace.gain_evaluations.empty()
                              ? assess_and_adopt(session, cfg).gains.best_gain
                              : trace.gain_evaluations.back().best_gain;
  const ErrorReport err = model_error(session.model(), env);
  trace.correct_model = err.correct;
  trace.final_error = err.mean_abs_error;
  return TrainingResult{session.model(), std::move(trace)};
}

// ---------------------------------------------------------------- experiments

TrialSummary run_trial(const AlphaEpsilonEnv& env, TrainerConfig cfg, std::uint64_t seed) {
  const AlphaEpsilonEnv noisy = env.with_noise(cfg.alpha, cfg.epsilon);
  cfg.seed = seed;
  cfg.record_steps = false;
  Rng rng(seed);
  const auto result = learn_environment(noisy, cfg, rng);
  TrialSummary summary;
  summary.seed = seed;
  summary.total_actions = result.trace.total_actions;
  summary.phase_actions = result.trace.phase_actions;
  summary.final_num_states = result.model.num_states();
  summary.outcome = result.trace.outcome;
  summary.success = result.trace.correct_model;
  summary.final_error = result.trace.final_error;
  return summary;
}

namespace {

std::pair<double, double> mean_stddev(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}

std::vector<TrialSummary> run_trials(const AlphaEpsilonEnv& env, const TrainerConfig& cfg,
                                     std::size_t trials, std::uint64_t base_seed,
                                     std::size_t jobs) {
  std::vector<TrialSummary> out(trials);
  jobs = std::max<std::size_t>(1, std::min(jobs, trials));
  if (jobs == 1) {
    for (std::size_t i = 0; i < trials; ++i) out[i] = run_trial(env, cfg, base_seed + i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < trials; i = next++) {
        out[i] = run_trial(env, cfg, base_seed + i);
      }
    });
  }
  for (auto& t : workers) t.join();
  return out;
}

TrainerConfig arm_config(TrainerConfig cfg, PolicyKind policy) {
  cfg.policy = policy;
  cfg.posterior_rule =
      policy == PolicyKind::Navigation ? PosteriorRule::Argmax : PosteriorRule::Baseline;
  return cfg;
}

}  // namespace

ArmSummary summarize_arm(PolicyKind policy, std::vector<TrialSummary> trials) {
  ArmSummary arm;
  arm.policy = policy;
  std::vector<double> actions;
  std::vector<double> errors;
  std::size_t successes = 0;
  std::size_t max_phases = 0;
  for (const auto& t : trials) {
    actions.push_back(static_cast<double>(t.total_actions));
    max_phases = std::max(max_phases, t.phase_actions.size());
    if (t.success) {
      ++successes;
      if (t.final_error) errors.push_back(*t.final_error);
    }
  }
  std::tie(arm.mean_actions, arm.stddev_actions) = mean_stddev(actions);
  for (std::size_t p = 0; p < max_phases; ++p) {
    std::vector<double> phase;
    for (const auto& t : trials) {
      if (p < t.phase_actions.size()) phase.push_back(static_cast<double>(t.phase_actions[p]));
    }
    const auto [mean, sd] = mean_stddev(phase);
    arm.mean_phase_actions.push_back(mean);
    arm.stddev_phase_actions.push_back(sd);
  }
  if (!trials.empty()) {
    arm.success_rate = static_cast<double>(successes) / static_cast<double>(trials.size());
  }
  if (!errors.empty()) {
    const auto [mean, sd] = mean_stddev(errors);
    arm.mean_error = mean;
    arm.stddev_error = sd;
  }
  arm.trials = std::move(trials);
  return arm;
}

Comparison compare_policies(const AlphaEpsilonEnv& env, const TrainerConfig& cfg_template,
                            std::size_t trials, std::uint64_t base_seed, std::size_t jobs) {
  if (trials < 1) throw std::invalid_argument("at least one trial is required");
  validate_config(cfg_template);
  Comparison cmp;
  cmp.baseline = summarize_arm(
      PolicyKind::Baseline,
      run_trials(env, arm_config(cfg_template, PolicyKind::Baseline), trials, base_seed, jobs));
  cmp.navigation = summarize_arm(
      PolicyKind::Navigation,
      run_trials(env, arm_config(cfg_template, PolicyKind::Navigation), trials, base_seed, jobs));
  if (cmp.baseline.mean_actions > 0.0) {
    cmp.action_reduction = 1.0 - cmp.navigation.mean_actions / cmp.baseline.mean_actions;
  }
  return cmp;
}

std::vector<SweepRow> sweep_alpha(const AlphaEpsilonEnv& env, const TrainerConfig& cfg_template,
                                  const std::vector<double>& alphas, std::size_t trials,
                                  std::uint64_t base_seed, std::size_t jobs) {
  std::vector<SweepRow> rows;
  for (double alpha : alphas) {
    TrainerConfig cfg = cfg_template;
    cfg.alpha = alpha;
    const Comparison cmp = compare_policies(env, cfg, trials, base_seed, jobs);
    for (const ArmSummary* arm : {&cmp.baseline, &cmp.navigation}) {
      SweepRow row;
      row.alpha = alpha;
      row.policy = arm->policy;
      row.success_rate = arm->success_rate;
      row.mean_error = arm->mean_error;
      row.stddev_error = arm->stddev_error;
      if (arm->mean_error && *arm->mean_error > 0.0) {
        row.ratio = arm->success_rate / *arm->mean_error;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace sbl
