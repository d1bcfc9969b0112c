#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace wavestab {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument values (non-finite, out of range, wrong shape).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed user input (system files, grid specs, CLI values).
class InputError : public Error {
public:
    using Error::Error;
};

class PoleEvaluationError : public Error {
public:
    explicit PoleEvaluationError(std::complex<double> s)
        : Error("transfer function evaluated at a pole, s = (" + std::to_string(s.real()) + ", " +
                std::to_string(s.imag()) + ")"),
          point(s) {}
    std::complex<double> point;
};

/// alpha == 0: W(x, s) is a pure delay and has no finite poles.
class NoChannelPoles : public Error {
public:
    NoChannelPoles() : Error("reflection coefficient is zero; the channel has no finite poles") {}
};

class NotHurwitz : public Error {
public:
    using Error::Error;
};

/// The resultant vanished identically: a continuum of imaginary-axis crossings.
class DegenerateFamily : public Error {
public:
    using Error::Error;
};

/// A characteristic root of the delay-free system sits on the imaginary axis.
class MarginalAtZero : public Error {
public:
    using Error::Error;
};

class DegenerateTendency : public Error {
public:
    using Error::Error;
};

class AssemblyError : public Error {
public:
    using Error::Error;
};

/// The analysis refuses a system that fails a structural gate (e.g. |alpha| = 1).
class GateRefused : public Error {
public:
    using Error::Error;
};

}  // namespace wavestab
