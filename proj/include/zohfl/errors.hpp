#pragma once

#include <stdexcept>
#include <string>

namespace zohfl {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector/matrix shape disagreement.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An argument outside its documented range (step sizes, fractions, budgets).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Empty shard, empty participant set, or an infeasible partition.
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed binary/text input; message carries a byte offset where known.
class FormatError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf escaped a computation; the run aborts rather than clipping.
class NumericsError : public Error {
 public:
  using Error::Error;
};

// A ground-truth computation was asked for a case it does not cover.
class OracleError : public Error {
 public:
  using Error::Error;
};

}  // namespace zohfl
