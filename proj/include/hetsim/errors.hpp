#pragma once

#include <stdexcept>
#include <string>

namespace hetsim {

// Invalid model parameters or malformed configuration input.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Out-of-range argument to a mathematical function (rank, choice count, ...).
class ArgumentError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// A computation would exceed a configured size budget (tree nodes, state space, series length).
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numerical procedure failed to reach its accuracy target.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A model violates a structural precondition (e.g. a reducible generator).
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hetsim
