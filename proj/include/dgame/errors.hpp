#ifndef DGAME_ERRORS_HPP
#define DGAME_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dgame {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Game definition is malformed or produced a non-finite value.
class InvalidSpecError : public Error {
 public:
  using Error::Error;
};

/// A lattice state or jump target left the truncated box.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// Integration step violates a stability ceiling, or growth detector fired.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

/// Requested grid does not fit the memory budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Bad user input (CLI flags, config files, preconditions).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dgame

#endif
