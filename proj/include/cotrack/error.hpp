#pragma once

#include <stdexcept>
#include <string>

namespace cotrack {

/// Malformed arguments, shapes, files or preconditions. CLI exit code 2.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Factorization breakdown, non-finite activations and similar. CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, int index = -1)
        : std::runtime_error(what), index_(index) {}

    /// Failing pivot (linalg) or layer (convnet); -1 when not applicable.
    int index() const noexcept { return index_; }

private:
    int index_;
};

}  // namespace cotrack
