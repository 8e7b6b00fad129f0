#pragma once
#include <stdexcept>
#include <string>

namespace contea {

// All library failures surface as Error. Messages start with a stable
// category phrase ("parse error", "dangling link error", ...) that callers
// and tests can match on.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace contea
