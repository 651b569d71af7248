#include "sbl/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sbl/env_io.hpp"
#include "sbl/errors.hpp"

namespace sbl::cli {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string{}; }

std::string join(const std::vector<std::size_t>& xs, char sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(xs[i]);
  }
  return out;
}

// Resolves flags against the environment file.
struct Prepared {
  AlphaEpsilonEnv env;
  TrainerConfig cfg;
};

Prepared prepare(const RunSpec& spec) {
  const AlphaEpsilonEnv file_env = load_env(spec.env_path);
  TrainerConfig cfg = spec.trainer;
  cfg.alpha = spec.alpha.value_or(file_env.alpha());
  cfg.epsilon = spec.epsilon.value_or(file_env.epsilon());
  if (!spec.posterior_rule_set) {
    cfg.posterior_rule =
        cfg.policy == PolicyKind::Navigation ? PosteriorRule::Argmax : PosteriorRule::Baseline;
  }
  validate_config(cfg);
  return Prepared{file_env.with_noise(cfg.alpha, cfg.epsilon), cfg};
}

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::invalid_argument("cannot open output file " + path);
  return os;
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const InvalidEnvironment& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const DegenerateDistribution& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const InvariantViolation& e) {
    err << "internal invariant violated: " << e.what() << '\n';
    return kExitInvariant;
  }
}

void print_arm(std::ostream& out, const ArmSummary& arm) {
  out << to_string(arm.policy) << ": mean_actions=" << fmt(arm.mean_actions)
      << " stddev_actions=" << fmt(arm.stddev_actions)
      << " success_rate=" << fmt(arm.success_rate) << " mean_error=" << fmt(arm.mean_error)
      << " per_split=";
  for (std::size_t i = 0; i < arm.mean_phase_actions.size(); ++i) {
    if (i) out << ';';
    out << fmt(arm.mean_phase_actions[i]) << "+-" << fmt(arm.stddev_phase_actions[i]);
  }
  out << '\n';
}

}  // namespace

std::vector<double> parse_alpha_list(const std::string& text) {
  auto number = [](const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
  };
  std::vector<double> out;
  try {
    if (text.find(':') != std::string::npos) {
      std::vector<std::string> parts;
      std::stringstream ss(text);
      for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
      if (parts.size() != 3) throw std::invalid_argument("range must be start:stop:step");
      const double start = number(parts[0]);
      const double stop = number(parts[1]);
      const double step = number(parts[2]);
      if (!(step > 0.0) || stop < start) throw std::invalid_argument("empty alpha range");
      for (std::size_t i = 0;; ++i) {
        const double v = std::round((start + static_cast<double>(i) * step) * 1e9) / 1e9;
        if (v > stop + 1e-9) break;
        out.push_back(v);
      }
      if (stop - out.back() > 1e-9) out.push_back(stop);
    } else {
      std::stringstream ss(text);
      for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
    }
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("alpha value out of range");
  }
  if (out.empty()) throw std::invalid_argument("no alpha values given");
  return out;
}

void write_trace_csv(std::ostream& os, std::size_t trial, const TrainingTrace& trace,
                     const SPomdpModel& model) {
  os << "trial,step,policy_mode,action,observation,num_model_states,confidence_min,"
        "running_error,schema_version\n";
  for (const auto& s : trace.steps) {
    os << trial << ',' << s.step << ',' << to_string(s.mode) << ','
       << model.action_names()[s.action] << ',' << model.observation_names()[s.observation]
       << ',' << s.num_model_states << ',' << fmt(s.confidence_min) << ','
       << fmt(s.running_error) << ',' << kCsvSchemaVersion << '\n';
  }
}

void write_comparison_csv(std::ostream& os, const Comparison& cmp) {
  os << "policy,trial,actions_total,actions_per_split,success,final_error,schema_version\n";
  for (const ArmSummary* arm : {&cmp.baseline, &cmp.navigation}) {
    for (std::size_t i = 0; i < arm->trials.size(); ++i) {
      const auto& t = arm->trials[i];
      os << to_string(arm->policy) << ',' << i << ',' << t.total_actions << ','
         << join(t.phase_actions, ';') << ',' << (t.success ? 1 : 0) << ','
         << fmt(t.final_error) << ',' << kCsvSchemaVersion << '\n';
    }
  }
  // Aggregate rows: trial column holds the statistic name.
  for (const ArmSummary* arm : {&cmp.baseline, &cmp.navigation}) {
    std::string mean_split;
    std::string sd_split;
    for (std::size_t i = 0; i < arm->mean_phase_actions.size(); ++i) {
      if (i) {
        mean_split += ';';
        sd_split += ';';
      }
      mean_split += fmt(arm->mean_phase_actions[i]);
      sd_split += fmt(arm->stddev_phase_actions[i]);
    }
    os << to_string(arm->policy) << ",mean," << fmt(arm->mean_actions) << ',' << mean_split
       << ',' << fmt(arm->success_rate) << ',' << fmt(arm->mean_error) << ','
       << kCsvSchemaVersion << '\n';
    os << to_string(arm->policy) << ",stddev," << fmt(arm->stddev_actions) << ',' << sd_split
       << ",," << fmt(arm->stddev_error) << ',' << kCsvSchemaVersion << '\n';
  }
  os << "reduction_percent,all," << fmt(100.0 * cmp.action_reduction) << ",,,,"
     << kCsvSchemaVersion << '\n';
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "alpha,policy,success_rate,mean_error,stddev_error,ratio,schema_version\n";
  for (const auto& r : rows) {
    os << fmt(r.alpha) << ',' << to_string(r.policy) << ',' << fmt(r.success_rate) << ','
       << fmt(r.mean_error) << ',' << fmt(r.stddev_error) << ',' << fmt(r.ratio) << ','
       << kCsvSchemaVersion << '\n';
  }
}

int cmd_run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Prepared p = prepare(spec);
    Rng rng(p.cfg.seed);
    const TrainingResult result = learn_environment(p.env, p.cfg, rng);

    auto os = open_output(spec.output_path.empty() ? "trace.csv" : spec.output_path);
    write_trace_csv(os, 0, result.trace, result.model);
    if (!spec.snapshot_path.empty()) {
      auto snap = open_output(spec.snapshot_path);
      snap << model_snapshot(result.model).dump(2) << '\n';
    }

    const auto& t = result.trace;
    out << "policy=" << to_string(p.cfg.policy) << " posterior=" << to_string(p.cfg.posterior_rule)
        << " seed=" << p.cfg.seed << " actions=" << t.total_actions
        << " actions_per_split=" << join(t.phase_actions, ';')
        << " model_states=" << result.model.num_states() << " outcome=" << to_string(t.outcome)
        << " correct=" << (t.correct_model ? 1 : 0) << " final_error=" << fmt(t.final_error)
        << '\n';
    return kExitOk;
  });
}

int cmd_compare(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (spec.trials < 1) throw std::invalid_argument("--trials must be at least 1");
    const Prepared p = prepare(spec);
    const Comparison cmp = compare_policies(p.env, p.cfg, spec.trials, p.cfg.seed, spec.jobs);
    auto os = open_output(spec.output_path.empty() ? "compare.csv" : spec.output_path);
    write_comparison_csv(os, cmp);
    print_arm(out, cmp.baseline);
    print_arm(out, cmp.navigation);
    out << "action_reduction=" << fmt(100.0 * cmp.action_reduction) << "%\n";
    return kExitOk;
  });
}

int cmd_sweep(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (spec.trials < 1) throw std::invalid_argument("--trials must be at least 1");
    const auto alphas = parse_alpha_list(spec.alphas);
    const Prepared p = prepare(spec);
    for (double a : alphas) {
      // Surface invalid alphas as config errors before any trial runs.
      (void)p.env.with_noise(a, p.cfg.epsilon);
    }
    const auto rows = sweep_alpha(p.env, p.cfg, alphas, spec.trials, p.cfg.seed, spec.jobs);
    auto os = open_output(spec.output_path.empty() ? "sweep.csv" : spec.output_path);
    write_sweep_csv(os, rows);
    for (const auto& r : rows) {
      out << "alpha=" << fmt(r.alpha) << ' ' << to_string(r.policy)
          << " success_rate=" << fmt(r.success_rate) << " mean_error=" << fmt(r.mean_error)
          << " ratio=" << fmt(r.ratio) << '\n';
    }
    return kExitOk;
  });
}

int cmd_validate_env(const std::string& env_path, std::ostream& out, std::ostream& err) {
  try {
    const EnvDescription desc = read_env_description(env_path);
    const auto violations = validate_env(desc);
    if (violations.empty()) {
      out << env_path << ": ok (" << desc.states.size() << " states, " << desc.actions.size()
          << " actions, " << desc.observations.size() << " observations)\n";
      return kExitOk;
    }
    err << env_path << ": " << violations.size() << " violation(s)\n";
    for (const auto& v : violations) err << "  " << v << '\n';
    return kExitConfigError;
  } catch (const InvalidEnvironment& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

}  // namespace sbl::cli
