#pragma once

#include <stdexcept>
#include <string>

namespace mdporder {

/// Raised for malformed inputs and violated preconditions. The CLI maps it to
/// exit code 1; every other std::exception maps to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ValidationError(message);
}

} // namespace mdporder
