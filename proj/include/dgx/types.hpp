#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dgx {

/// Dense row/column storage used throughout; all arithmetic is double precision.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violated a documented precondition (shape, finiteness, range).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A serialized artifact could not be decoded.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside a computation (non-finite intermediate).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace dgx
