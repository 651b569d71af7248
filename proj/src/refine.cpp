#include "sbl/refine.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace sbl {

namespace {

void normalize(std::span<double> v) {
  double total = 0.0;
  for (double x : v) total += x;
  if (!(total > 0.0)) {
    for (double& x : v) x = 1.0 / static_cast<double>(v.size());
    return;
  }
  for (double& x : v) x /= total;
}

}  // namespace

SPomdpModel refine_transitions(const SPomdpModel& model, std::span<const HistorySegment> segments,
                               std::size_t sweeps, double tolerance) {
  SPomdpModel out = model;
  std::size_t longest = 0;
  for (const auto& seg : segments) longest = std::max(longest, seg.steps.size());
  if (sweeps == 0 || longest == 0) return out;

  const std::size_t n = model.num_states();
  const Matrix omega = model_observation_probs(model);
  std::vector<double> fwd((longest + 1) * n);
  std::vector<double> bwd((longest + 1) * n);
  std::vector<double> joint(n * n);

  Tensor3 t = transition_probs(out);
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    Tensor3 gamma(model.num_actions(), n, n, 1.0);
    for (const auto& seg : segments) {
      const auto history = seg.steps;
      const std::size_t len = history.size();

      for (std::size_t m = 0; m < n; ++m) fwd[m] = omega(m, seg.initial_observation);
      normalize({fwd.data(), n});
      for (std::size_t k = 0; k < len; ++k) {
        const auto& step = history[k];
        double* next = &fwd[(k + 1) * n];
        for (std::size_t j = 0; j < n; ++j) {
          double v = 0.0;
          for (std::size_t m = 0; m < n; ++m) v += fwd[k * n + m] * t(step.action, m, j);
          next[j] = v * omega(j, step.observation);
        }
        normalize({next, n});
      }

      for (std::size_t m = 0; m < n; ++m) bwd[len * n + m] = 1.0;
      for (std::size_t k = len; k-- > 0;) {
        const auto& step = history[k];
        for (std::size_t m = 0; m < n; ++m) {
          double v = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            v += t(step.action, m, j) * omega(j, step.observation) * bwd[(k + 1) * n + j];
          }
          bwd[k * n + m] = v;
        }
        normalize({&bwd[k * n], n});
      }

      for (std::size_t k = 0; k < len; ++k) {
        const auto& step = history[k];
        double total = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
          for (std::size_t j = 0; j < n; ++j) {
            const double v = fwd[k * n + m] * t(step.action, m, j) *
                             omega(j, step.observation) * bwd[(k + 1) * n + j];
            joint[m * n + j] = v;
            total += v;
          }
        }
        if (!(total > 0.0)) continue;
        const double scale = model.learning_rate() / total;
        for (std::size_t m = 0; m < n; ++m) {
          for (std::size_t j = 0; j < n; ++j) gamma(step.action, m, j) += joint[m * n + j] * scale;
        }
      }
    }
    out.set_gamma(std::move(gamma));

    Tensor3 next = transition_probs(out);
    double moved = 0.0;
    for (std::size_t a = 0; a < model.num_actions(); ++a) {
      for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t j = 0; j < n; ++j) {
          moved = std::max(moved, std::abs(next(a, m, j) - t(a, m, j)));
        }
      }
    }
    t = std::move(next);
    if (moved <= tolerance) break;
  }
  return out;
}

SPomdpModel refine_transitions(const SPomdpModel& model, std::size_t initial_observation,
                               std::span<const StepOutcome> history, std::size_t sweeps,
                               double tolerance) {
  const HistorySegment seg{initial_observation, history};
  return refine_transitions(model, std::span<const HistorySegment>(&seg, 1), sweeps, tolerance);
}

Tensor3 redistribute_rows(const Tensor3& totals, const Tensor3& shape) {
  Tensor3 out = totals;
  for (std::size_t a = 0; a < totals.dim0(); ++a) {
    for (std::size_t m = 0; m < totals.dim1(); ++m) {
      const auto src = totals.row(a, m);
      const auto dst = shape.row(a, m);
      double mass = 0.0;
      double shape_mass = 0.0;
      for (std::size_t j = 0; j < src.size(); ++j) {
        mass += src[j] - 1.0;
        shape_mass += dst[j] - 1.0;
      }
      if (!(shape_mass > 0.0)) continue;
      for (std::size_t j = 0; j < src.size(); ++j) {
        out(a, m, j) = 1.0 + mass * ((dst[j] - 1.0) / shape_mass);
      }
    }
  }
  return out;
}

}  // namespace sbl
