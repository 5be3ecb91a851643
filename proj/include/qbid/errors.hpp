#pragma once

#include <stdexcept>
#include <string>

namespace qbid {

// Malformed or inconsistent experiment configuration. The CLI maps this to
// exit code 2; everything else maps to exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// An exact enumeration was requested on an instance too large to enumerate.
// Raised instead of silently falling back to sampling.
struct BudgetError : std::runtime_error {
  explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

// A learner received a reward coordinate outside [-1, 1]. Gradients of the
// quantile utility are guaranteed to stay in range for valid formats, so this
// signals a format-validation bug and aborts the run rather than clipping.
struct RewardRangeError : std::runtime_error {
  explicit RewardRangeError(const std::string& what)
      : std::runtime_error(what) {}
};

// A prior failed the regularity (monotone virtual value) check.
struct RegularityError : std::runtime_error {
  explicit RegularityError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace qbid
