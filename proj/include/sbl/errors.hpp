#pragma once

#include <stdexcept>
#include <string>

namespace sbl {

class InvalidEnvironment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateDistribution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by split_model when the new SDEs would duplicate existing ones.
class SplitRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A runtime check on a mathematical invariant failed (e.g. a belief with no
/// probability mass left). Indicates a bug, not bad input.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace sbl
