#pragma once

// Latent-state detection and model splitting.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sbl/spomdp.hpp"
#include "sbl/tensor.hpp"

namespace sbl {

/// Base-2 Shannon entropy; zero entries contribute nothing.
double entropy_bits(std::span<const double> probs);

struct GainReport {
  Matrix gains;  // [m][a]
  std::size_t best_state = 0;
  std::size_t best_action = 0;
  double best_gain = 0.0;
  double baseline_entropy = 0.0;  // entropy of the ideal alpha-epsilon row

  struct Entry {
    std::size_t state;
    std::size_t action;
    double gain;
  };
  /// Every (m, a) pair ordered by descending gain; ties keep (m, a) order.
  std::vector<Entry> ranked() const;
};

/// Gain of each (m, a) pair: how far the learned transition row's entropy sits
/// above the entropy of an ideal alpha-epsilon row over |M| states, floored at
/// zero. When `alpha` is not supplied it is estimated as the mean row maximum.
/// A positive `significance` subtracts that many standard errors of the row's
/// entropy estimate before flooring: the larger of the delta-method error from
/// its Dirichlet counts and, when given, the matching entry of `entropy_se`
/// (indexed [m, a]). Pairs whose confidence is below `min_confidence` score
/// zero.
GainReport compute_gains(const SPomdpModel& model, std::optional<double> alpha,
                         double significance = 0.0, double min_confidence = 0.0,
                         const Matrix* entropy_se = nullptr);

struct SplitSpec {
  std::size_t target = 0;
  std::size_t action = 0;
  std::size_t first = 0;   // most likely successor
  std::size_t second = 0;  // runner-up

  bool operator==(const SplitSpec&) const = default;
};

/// The two most likely successors of (m, a); ties go to the lower id.
SplitSpec make_split_spec(const SPomdpModel& model, std::size_t m, std::size_t action);

/// New model where `spec.target` is replaced by two states with SDEs
/// [o(m), a] ++ sde(first) and [o(m), a] ++ sde(second). The first new state
/// takes the target's id, the second is inserted right after it. Counts are
/// reset to one. Throws SplitRejected when either new SDE already exists.
SPomdpModel split_model(const SPomdpModel& model, const SplitSpec& spec);

}  // namespace sbl
