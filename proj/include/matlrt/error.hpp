#pragma once

#include <stdexcept>
#include <string>

namespace matlrt {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input: bad shapes, parse failures, invalid
// parameters.
class DataError : public Error {
public:
  using Error::Error;
};

// Numerical failure: rank deficiency, loss of positive definiteness,
// singular covariance.
class NumericalError : public Error {
public:
  using Error::Error;
};

}  // namespace matlrt
