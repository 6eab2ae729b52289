#pragma once

#include <stdexcept>
#include <string>

namespace gbath {

// Invalid argument or configuration supplied by the caller.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Quadrature, solver or sampler failed to reach its tolerance.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An internal precondition that callers are expected to guarantee was broken.
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// Persistence problems: unreadable or incompatible snapshot, unwritable output.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InputError(what);
}

}  // namespace gbath
