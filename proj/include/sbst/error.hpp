#pragma once

#include <stdexcept>
#include <string>

namespace sbst {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A simulation produced a non-finite value and was stopped.
class SimulationAbort : public Error {
public:
    using Error::Error;
};

/// Runtime failure while evaluating an expression (division by zero, ...).
class EvalError : public Error {
public:
    using Error::Error;
};

}  // namespace sbst
