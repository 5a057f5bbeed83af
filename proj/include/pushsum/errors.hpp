#pragma once

#include <stdexcept>
#include <string>

namespace pushsum {

/// Inputs whose sizes or node counts disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (e.g. gamma not in (0.5, 1)).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A precondition on the simulation state was broken (e.g. a node with no out-edges).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A perturbation exceeded the U / t^gamma envelope.
class ScheduleViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration or ensemble file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rate fitting was asked for with too few usable points.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system failures, always carrying the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pushsum
