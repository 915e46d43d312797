#pragma once

#include <stdexcept>
#include <string>

namespace mclab {

// Error taxonomy shared across modules. Everything is an invariant or input
// violation; numerical routines that detect internal disagreement throw
// OracleInconsistency, which always indicates an implementation bug.

struct InvalidPoint : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidRate : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct CapacityError : std::length_error {
    using std::length_error::length_error;
};

struct DegenerateState : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NotAbsorbed : std::logic_error {
    using std::logic_error::logic_error;
};

struct OracleInconsistency : std::logic_error {
    using std::logic_error::logic_error;
};

struct InvalidPlan : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IOError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mclab
