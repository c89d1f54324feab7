#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace wpd {

// Raised for malformed inputs: bad weights, invalid diagrams, out-of-range
// parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a construction would exceed a configured size budget
// (common denominators, support sizes, search caps).
class CapacityError : public std::runtime_error {
 public:
  CapacityError(const std::string& what, std::int64_t offending)
      : std::runtime_error(what), offending_(offending) {}

  std::int64_t offending() const noexcept { return offending_; }

 private:
  std::int64_t offending_;
};

}  // namespace wpd
