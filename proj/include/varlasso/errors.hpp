#pragma once
#include <stdexcept>
#include <string>
#include "types.hpp"

namespace varlasso {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (bad dimensions, non-positive lambda, ...).
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

class IoError : public Error
{
public:
    using Error::Error;
};

/// Base for failures of the numerics themselves; the CLI maps these to exit code 2.
class NumericalError : public Error
{
public:
    using Error::Error;
};

class SingularMatrixError : public NumericalError
{
public:
    using NumericalError::NumericalError;
};

class ZeroResidualError : public NumericalError
{
public:
    using NumericalError::NumericalError;
};

/// Two path events closer than the breakpoint tolerance.
class DegenerateBreakpointError : public NumericalError
{
public:
    DegenerateBreakpointError(double lambda, Index first, Index second)
        : NumericalError("degenerate breakpoint near lambda=" + std::to_string(lambda)
                         + ": events for columns " + std::to_string(first) + " and "
                         + std::to_string(second)
                         + " coincide (Generic Condition violation suspected)"),
          lambda_(lambda), first_(first), second_(second)
    {}
    double lambda() const { return lambda_; }
    Index first() const { return first_; }
    Index second() const { return second_; }

private:
    double lambda_;
    Index first_, second_;
};

/// The requested tuning target lies outside the range attained on the computed path.
class OutOfRangeError : public NumericalError
{
public:
    OutOfRangeError(const std::string& what, double lo, double hi)
        : NumericalError(what + " (attainable range [" + std::to_string(lo) + ", "
                         + std::to_string(hi) + "])"),
          lo_(lo), hi_(hi)
    {}
    double attainable_lo() const { return lo_; }
    double attainable_hi() const { return hi_; }

private:
    double lo_, hi_;
};

} // namespace varlasso
