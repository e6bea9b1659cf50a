#pragma once

#include <stdexcept>
#include <string>

namespace becpf {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public Error {
public:
  using Error::Error;
};

// z g = 1 for some mode, or an exactly singular linear solve.
class SingularInputError : public Error {
public:
  using Error::Error;
};

class QuadratureError : public Error {
public:
  using Error::Error;
};

// The box is too small for the deformed top eigenvalue to sit above g_1.
class OrderingError : public Error {
public:
  using Error::Error;
};

class SubcriticalDensityError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class NumericalGuardError : public Error {
public:
  using Error::Error;
};

} // namespace becpf
