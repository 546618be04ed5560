#pragma once

#include <stdexcept>
#include <string>

namespace foilrl {

// Base of every error the library throws. Each subclass maps to one failure
// category the command-line front end turns into an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class GeometryRejected : public Error {
 public:
  using Error::Error;
};

class ContractViolation : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ResetError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

class SeedError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EmptyEvalError : public Error {
 public:
  using Error::Error;
};

#define FOILRL_REQUIRE(cond, ErrorType, msg) \
  do {                                       \
    if (!(cond)) throw ErrorType(msg);       \
  } while (0)

}  // namespace foilrl
