#ifndef MWSMM_ERROR_HPP
#define MWSMM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mwsmm {

// Domain error carrying a stable machine-readable code (E_SYNTAX, E_LIMIT, ...).
// The CLI maps any Error to exit code 1; everything else is a usage error.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message) {
    throw Error(std::move(code), message);
}

} // namespace mwsmm

#endif // MWSMM_ERROR_HPP
