#pragma once

// Batch re-estimation of transition counts from a recorded action/observation
// history (Baum-Welch on the sPOMDP with its fixed observation model).

#include <cstddef>
#include <span>

#include "sbl/spomdp.hpp"

namespace sbl {

struct StepOutcome {
  std::size_t action;
  std::size_t observation;  // observed after the action
};

/// A stretch of contiguous history that starts where `initial_observation`
/// was seen.
struct HistorySegment {
  std::size_t initial_observation;
  std::span<const StepOutcome> steps;
};

/// Returns a copy of `model` whose counts are 1 + η·(expected transition
/// counts) after `sweeps` forward-backward passes over `history`, starting
/// from the model's own transitions. The history begins at a step where
/// `initial_observation` was seen under a uniform prior. Sweeps stop early once
/// no transition probability moves by more than `tolerance`. Zero sweeps or an
/// empty history return the model unchanged.
SPomdpModel refine_transitions(const SPomdpModel& model, std::size_t initial_observation,
                               std::span<const StepOutcome> history, std::size_t sweeps,
                               double tolerance = 0.0);

/// Same, pooling expected counts over several independent segments.
SPomdpModel refine_transitions(const SPomdpModel& model, std::span<const HistorySegment> segments,
                               std::size_t sweeps, double tolerance = 0.0);

/// Counts keeping each row total of `totals`, with the mass above the unit
/// prior spread like the matching row of `shape` above its own unit prior.
/// Rows of `shape` holding no mass above the prior are kept as they are.
Tensor3 redistribute_rows(const Tensor3& totals, const Tensor3& shape);

}  // namespace sbl
