#pragma once

#include <stdexcept>
#include <string>

namespace polyboot {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invalid input data (CSV content, sample invariants).
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid parameter passed to an operation.
class ParamError : public Error {
public:
    using Error::Error;
};

/// Configuration problem detected by the command-line front end.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A resampling draw that puts zero weight on every observed tuple.
class DegenerateDraw : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to reach its tolerance.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double last_residual = 0.0)
        : Error(what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

class SingularDesign : public SolverError {
public:
    using SolverError::SolverError;
};

class SingularWeightMatrix : public SolverError {
public:
    using SolverError::SolverError;
};

class SingularJacobian : public SolverError {
public:
    using SolverError::SolverError;
};

/// Too many failed draws in a bootstrap run.
class BootstrapError : public Error {
public:
    using Error::Error;
};

/// The operation does not support the shape of the given data.
class Unsupported : public Error {
public:
    using Error::Error;
};

/// A user-supplied map could not be evaluated.
class EvalError : public Error {
public:
    using Error::Error;
};

class CounterfactualError : public Error {
public:
    using Error::Error;
};

class DgpError : public Error {
public:
    using Error::Error;
};

}  // namespace polyboot
