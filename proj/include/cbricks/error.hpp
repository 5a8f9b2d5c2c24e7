#pragma once

#include <stdexcept>
#include <string>

namespace cbricks {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition or parameter invariant does not hold.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The nodal system could not be factorized (floating subgraph).
class SingularSystemError : public Error {
public:
    using Error::Error;
};

/// A transient step produced a non-finite value.
class NumericalInstabilityError : public Error {
public:
    using Error::Error;
};

/// Normal equations too ill-conditioned to solve without regularization.
class IllConditionedError : public Error {
public:
    using Error::Error;
};

/// Gradient descent objective blew up.
class StepSizeError : public Error {
public:
    using Error::Error;
};

/// Some cells can never be reached from the source.
class UnreachableError : public Error {
public:
    using Error::Error;
};

inline void require(bool condition, const std::string& what) {
    if (!condition) throw ValidationError(what);
}

}  // namespace cbricks
