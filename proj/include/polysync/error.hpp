#pragma once

#include <stdexcept>
#include <string>

namespace polysync {

// Error categories. Each maps to one CLI exit code (see cli/exit_code()).
enum class ErrorKind {
    InvalidInput,
    Shape,
    Numerical,
    Size,
    Precondition,   // an assumption of the method is violated (data rank, graph, leader poles)
    NoSolution,
    SynthesisFailure,
    CertificateMismatch,
    ObserverDesignFailure,
    Divergence,
    UnavailableOracle,
    Integrity,
    Verification,
    Config,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) throw Error(kind, what);
}

} // namespace polysync
