#pragma once

#include <cmath>
#include <cstdint>

#include "pushsum/errors.hpp"

namespace pushsum {

inline constexpr double kDefaultGamma = 0.6;

/// alpha(t) = 1 / t^gamma with gamma in the open interval (0.5, 1).
class StepSize {
 public:
  explicit StepSize(double gamma = kDefaultGamma) : gamma_(gamma) {
    if (!(gamma > 0.5 && gamma < 1.0)) throw ConfigError("step-size exponent gamma must lie in (0.5, 1)");
  }

  double gamma() const { return gamma_; }

  double operator()(std::uint64_t t) const {
    if (t == 0) throw DomainError("step size is defined for t >= 1");
    return 1.0 / std::pow(static_cast<double>(t), gamma_);
  }

 private:
  double gamma_;
};

}  // namespace pushsum
