#include "sbl/split.hpp"

#include <algorithm>
#include <cmath>

#include "sbl/env.hpp"
#include "sbl/errors.hpp"

namespace sbl {

double entropy_bits(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

std::vector<GainReport::Entry> GainReport::ranked() const {
  std::vector<Entry> out;
  for (std::size_t m = 0; m < gains.rows(); ++m) {
    for (std::size_t a = 0; a < gains.cols(); ++a) out.push_back({m, a, gains(m, a)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Entry& x, const Entry& y) { return x.gain > y.gain; });
  return out;
}

GainReport compute_gains(const SPomdpModel& model, std::optional<double> alpha,
                         double significance, double min_confidence,
                         const Matrix* entropy_se) {
  const Tensor3 t = transition_probs(model);
  const std::size_t n = model.num_states();

  double mode = 0.0;
  if (alpha) {
    mode = *alpha;
  } else {
    for (std::size_t a = 0; a < model.num_actions(); ++a) {
      for (std::size_t m = 0; m < n; ++m) {
        const auto row = t.row(a, m);
        mode += *std::max_element(row.begin(), row.end());
      }
    }
    mode /= static_cast<double>(n * model.num_actions());
  }

  GainReport report;
  report.gains = Matrix(n, model.num_actions());
  if (n >= 2 && mode > 1.0 / static_cast<double>(n)) {
    report.baseline_entropy = entropy_bits(make_alpha_epsilon_distribution(0, n, mode));
  } else if (n >= 2) {
    report.baseline_entropy = std::log2(static_cast<double>(n));
  }

  bool first = true;
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t a = 0; a < model.num_actions(); ++a) {
      const auto row = t.row(a, m);
      const double h = entropy_bits(row);
      const auto counts = model.gamma().row(a, m);
      double total = 0.0;
      for (double c : counts) total += c;
      double margin = 0.0;
      if (significance > 0.0) {
        // Delta-method standard error of the plug-in entropy.
        double second = 0.0;
        for (double p : row) {
          if (p > 0.0) second += p * std::log2(p) * std::log2(p);
        }
        double se = std::sqrt(std::max(0.0, second - h * h) / total);
        if (entropy_se) se = std::max(se, (*entropy_se)(m, a));
        margin = significance * se;
      }
      const bool supported = total / static_cast<double>(n) >= min_confidence;
      const double g = supported ? std::max(0.0, h - report.baseline_entropy - margin) : 0.0;
      report.gains(m, a) = g;
      if (first || g > report.best_gain) {
        report.best_gain = g;
        report.best_state = m;
        report.best_action = a;
        first = false;
      }
    }
  }
  return report;
}

SplitSpec make_split_spec(const SPomdpModel& model, std::size_t m, std::size_t action) {
  const std::size_t n = model.num_states();
  if (n < 2) throw InvalidModel("cannot split a model with fewer than 2 states");
  const Tensor3 t = transition_probs(model);
  const auto row = t.row(action, m);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return row[x] > row[y]; });
  return SplitSpec{m, action, order[0], order[1]};
}

SPomdpModel split_model(const SPomdpModel& model, const SplitSpec& spec) {
  const std::size_t head = model.sde(spec.target).first_observation();
  Sde first = Sde::prefixed(head, spec.action, model.sde(spec.first));
  Sde second = Sde::prefixed(head, spec.action, model.sde(spec.second));

  std::vector<Sde> states;
  for (std::size_t m = 0; m < model.num_states(); ++m) {
    if (m == spec.target) continue;
    if (model.sde(m) == first || model.sde(m) == second) {
      throw SplitRejected("split would duplicate an existing SDE");
    }
  }
  if (first == second) throw SplitRejected("split successors produce identical SDEs");

  for (std::size_t m = 0; m < model.num_states(); ++m) {
    if (m == spec.target) {
      states.push_back(first);
      states.push_back(second);
    } else {
      states.push_back(model.sde(m));
    }
  }
  return SPomdpModel(model.observation_names(), model.action_names(), std::move(states),
                     model.epsilon_model(), model.learning_rate());
}

}  // namespace sbl
