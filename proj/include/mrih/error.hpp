#pragma once

#include <stdexcept>
#include <string>

namespace mrih {

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or precondition violation (bad shape, bad parameter).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Missing, malformed or inconsistent on-disk data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf or divergence during a numeric procedure.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace mrih
