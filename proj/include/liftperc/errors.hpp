#pragma once

#include <stdexcept>
#include <string>

namespace liftperc {

// Invalid parameters or malformed input (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A coupling or exploration broke one of its asserted invariants (exit code 3).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Input exceeds an exact-enumeration bound (exit code 4).
class SizeGuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ConfigError(what);
}

inline void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ConfigError(std::string(name) + " must lie in [0,1], got " + std::to_string(p));
}

}  // namespace liftperc
