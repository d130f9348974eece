#pragma once

#include <stdexcept>

namespace semtrack {

// Shapes of matrices/vectors passed to an operation disagree.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A tracker update produced NaN or Inf, usually because the step size is too large.
class NonFiniteValue : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// I - A is numerically singular when solving for the observations.
class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The regret bound premise (beta > 0, alpha <= 1/L_f, gamma < 1) does not hold.
class AssumptionViolated : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// No sign pattern of the exact lasso oracle satisfies the KKT conditions.
class NoConsistentPattern : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Observation stream carries no energy (all-zero moments).
class DegenerateData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace semtrack
