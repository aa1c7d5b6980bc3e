#pragma once

#include <stdexcept>
#include <string>

namespace blockform {

/// Malformed or inconsistent caller input (CLI exit code 1).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// An internal invariant did not hold, e.g. a cycle in a condensation graph (CLI exit code 2).
class InvariantError : public std::logic_error {
public:
    explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace blockform
