#pragma once

#include <stdexcept>
#include <string>

namespace ember {

/// Base class for all errors raised by the library.
class SimError : public std::runtime_error {
public:
    explicit SimError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Scene/config validation failure (bad schema, bad parameter, empty geometry).
class ConfigError : public SimError {
public:
    explicit ConfigError(const std::string& msg) : SimError(msg) {}
};

/// Numerical failure during a simulation step.
class SolverError : public SimError {
public:
    explicit SolverError(const std::string& msg, double residual = 0.0, int iterations = 0)
        : SimError(msg), residual(residual), iterations(iterations) {}
    double residual;
    int iterations;
};

/// Interpolation stencil would reach outside the node lattice.
class StencilOutOfBounds : public SolverError {
public:
    StencilOutOfBounds(const std::string& msg, int axis) : SolverError(msg), axis(axis) {}
    int axis;
};

/// Inverted or collapsed element encountered in a constitutive evaluation.
class DegenerateElement : public SolverError {
public:
    explicit DegenerateElement(const std::string& msg, long particle = -1)
        : SolverError(msg), particle(particle) {}
    long particle;
};

/// Pure-Neumann pressure system whose right-hand side has nonzero net flux.
class CompatibilityError : public SolverError {
public:
    explicit CompatibilityError(const std::string& msg) : SolverError(msg) {}
};

class IoError : public SimError {
public:
    explicit IoError(const std::string& msg) : SimError(msg) {}
};

} // namespace ember
