#pragma once

#include <stdexcept>
#include <string>

namespace capbound {

// A caller-supplied argument violates an operation's precondition. The CLI
// maps this to exit code 2; the message names the violated inequality.
class PreconditionError : public std::domain_error {
public:
    explicit PreconditionError(const std::string& what) : std::domain_error(what) {}
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw PreconditionError(message);
}

} // namespace capbound
