#ifndef CPL_ERROR_HPP
#define CPL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cpl {

// Bad argument or violated type invariant (dimension mismatch, η ≥ ½, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A sample that no hypothesis in the requested class fits exactly.
class NoConsistentHypothesis : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A protocol was invoked outside the regime it is defined for.
class PreconditionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The weak learner failed to produce an edge over random guessing.
class WeakLearnerFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exact error computation is not available for this (hypothesis, distribution) pair.
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace cpl

#endif
