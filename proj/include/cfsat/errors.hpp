#pragma once

#include <stdexcept>
#include <string>

namespace cfsat {

// Base of every exception thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed interchange document, CSV cell, constraint file, decimal string.
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally invalid model, schema or configuration (dimension mismatch,
// unknown feature, bad weights).
class ValidationError : public Error {
public:
    using Error::Error;
};

// A program that violates the core-language rules: command after return,
// non-linear multiplication, loop bound over the unroll cap.
class MalformedProgram : public Error {
public:
    using Error::Error;
};

// Runtime failure of the reference interpreter (unbound variable, no return).
class EvaluationError : public Error {
public:
    using Error::Error;
};

// The same variable name used with two different sorts.
class SortClash : public Error {
public:
    using Error::Error;
};

// Solver ran out of its branch / elimination / integer-split budget, or an
// external backend timed out. Never reported as sat or unsat.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

// No counterfactual satisfies the constraints within distance 1.
class OverConstrained : public Error {
public:
    using Error::Error;
};

// External backend missing or returned something we cannot read.
class BackendError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace cfsat
