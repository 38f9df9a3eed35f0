#pragma once

#include <stdexcept>
#include <string>

namespace dmd {

// Bad input data: malformed network, infeasible flow, inconsistent dimensions.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration: schema violations, parameter ranges, degenerate setups.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dmd
