#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "sbl/cli.hpp"

namespace {

void add_trainer_flags(CLI::App* cmd, sbl::cli::RunSpec& spec, std::string& policy,
                       std::string& posterior) {
  auto& t = spec.trainer;
  cmd->add_option("--env", spec.env_path, "Environment config (JSON)")->required();
  cmd->add_option("--out", spec.output_path, "Output CSV path");
  cmd->add_option("--policy", policy, "nav | baseline")
      ->check(CLI::IsMember({"nav", "navigation", "baseline"}));
  cmd->add_option("--posterior", posterior, "Posterior rule: argmax | baseline (default by policy)")
      ->check(CLI::IsMember({"argmax", "baseline"}));
  cmd->add_option("--alpha", spec.alpha, "Override environment alpha");
  cmd->add_option("--epsilon", spec.epsilon, "Override environment epsilon");
  cmd->add_option("--explore", t.explore, "Random-action probability of the baseline policy")
      ->capture_default_str();
  cmd->add_option("--confidence-factor", t.confidence_factor)->capture_default_str();
  cmd->add_option("--localization-threshold", t.localization_threshold)->capture_default_str();
  cmd->add_option("--max-actions", t.max_actions)->capture_default_str();
  cmd->add_option("--gain-threshold", t.gain_threshold)->capture_default_str();
  cmd->add_option("--patience", t.patience)->capture_default_str();
  cmd->add_option("--learning-rate", t.learning_rate)->capture_default_str();
  cmd->add_option("--fallback-interval", t.fallback_eval_interval,
                  "Actions between gain evaluations while falling back")
      ->capture_default_str();
  cmd->add_option("--stall-limit", t.nav_stall_limit,
                  "Navigation actions without an experiment before falling back (0 = never)")
      ->capture_default_str();
  cmd->add_option("--mismatch-weight", t.sde_mismatch_weight,
                  "Weight kept per SDE outcome contradicting a state")
      ->capture_default_str();
  cmd->add_option("--lookahead", t.smoothing_lookahead,
                  "Extra steps of hindsight before a posterior update is committed")
      ->capture_default_str();
  cmd->add_option("--sde-prior", t.sde_prior_strength,
                  "Pseudo-count strength of the SDE outcome prior")
      ->capture_default_str();
  cmd->add_option("--refine-sweeps", t.refine_sweeps,
                  "Baum-Welch sweeps over recent history before scoring gains")
      ->capture_default_str();
  cmd->add_option("--refine-window", t.refine_window, "Most recent steps used for the refit")
      ->capture_default_str();
  cmd->add_option("--gain-significance", t.gain_significance,
                  "Standard errors subtracted from each gain")
      ->capture_default_str();
  cmd->add_option("--gain-support", t.gain_support,
                  "Share of the confidence factor a pair needs before its gain is scored")
      ->capture_default_str();
  cmd->add_option("--jackknife-blocks", t.jackknife_blocks,
                  "History blocks for the jackknife error of each gain (below 2 = off)")
      ->capture_default_str();
  cmd->add_option("--refit-interval", t.refit_interval,
                  "Actions between in-phase refits of the counts (0 = off)")
      ->capture_default_str();
  cmd->add_option("--seed", t.seed)->capture_default_str();
}

void apply_choices(sbl::cli::RunSpec& spec, const std::string& policy,
                   const std::string& posterior) {
  spec.trainer.policy =
      policy == "baseline" ? sbl::PolicyKind::Baseline : sbl::PolicyKind::Navigation;
  if (!posterior.empty()) {
    spec.posterior_rule_set = true;
    spec.trainer.posterior_rule =
        posterior == "baseline" ? sbl::PosteriorRule::Baseline : sbl::PosteriorRule::Argmax;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surprise-based learning of alpha-epsilon POMDP environments"};
  app.require_subcommand(1);

  sbl::cli::RunSpec spec;
  std::string policy = "nav";
  std::string posterior;
  std::string validate_path;

  auto* run = app.add_subcommand("run", "Learn one environment and write a step trace");
  add_trainer_flags(run, spec, policy, posterior);
  run->add_option("--snapshot", spec.snapshot_path, "Write the final model as JSON");

  auto* compare = app.add_subcommand("compare", "Baseline vs navigation over seeded trials");
  add_trainer_flags(compare, spec, policy, posterior);
  compare->add_option("--trials", spec.trials)->capture_default_str();
  compare->add_option("--jobs", spec.jobs, "Parallel trials")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Compare both policies across alpha values");
  add_trainer_flags(sweep, spec, policy, posterior);
  sweep->add_option("--alphas", spec.alphas, "start:stop:step or comma list")
      ->capture_default_str();
  sweep->add_option("--trials", spec.trials)->capture_default_str();
  sweep->add_option("--jobs", spec.jobs, "Parallel trials")->capture_default_str();

  auto* validate = app.add_subcommand("validate-env", "Check an environment config");
  validate->add_option("env", validate_path, "Environment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sbl::cli::kExitConfigError;
  }

  apply_choices(spec, policy, posterior);
  if (*run) return sbl::cli::cmd_run(spec, std::cout, std::cerr);
  if (*compare) return sbl::cli::cmd_compare(spec, std::cout, std::cerr);
  if (*sweep) return sbl::cli::cmd_sweep(spec, std::cout, std::cerr);
  return sbl::cli::cmd_validate_env(validate_path, std::cout, std::cerr);
}
