#pragma once

#include <stdexcept>
#include <string>

namespace gpaft {

// Malformed or inconsistent input: bad CSV/JSON shape, unknown ids, invalid
// status codes, interval bounds out of order. CLI maps this to exit code 2.
class schema_error : public std::runtime_error {
 public:
  explicit schema_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure that survived mitigation: covariance not positive definite
// after jitter, divergent objective, empty risk set where one is required.
// CLI maps this (and any other std::exception) to exit code 1.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gpaft
