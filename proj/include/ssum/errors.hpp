#pragma once

#include <stdexcept>
#include <string>

namespace ssum {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct BracketFailure : Error {
  using Error::Error;
};
struct InfeasibleStart : Error {
  using Error::Error;
};
struct TraceTooShort : Error {
  using Error::Error;
};
struct SingularW : Error {
  using Error::Error;
};
struct NonFinite : Error {
  using Error::Error;
};
struct DegenerateStats : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace ssum
