#pragma once

#include <stdexcept>
#include <string>

namespace lbmc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: unknown names, malformed configuration, bad arguments.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Math domain violations (ln/sqrt of negatives, unbound symbols, overflow).
class DomainError : public Error {
public:
    using Error::Error;
};

class SingularError : public Error {
public:
    using Error::Error;
};

/// Numerical failures at run time: NaN in a simulation, Newton non-convergence.
class RuntimeFailure : public Error {
public:
    using Error::Error;
};

}  // namespace lbmc
