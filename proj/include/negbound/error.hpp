#pragma once

#include <stdexcept>
#include <string>

namespace negbound {

enum class ErrorKind {
    InvalidArgument,
    NonConvergent,
    UnknownName,
    Overflow,
    WindowTooSmall,
    InvariantViolation,
    BisectionStall,
    IterationBudgetExceeded,
    SparsenessViolated,
    DiniViolated,
    GridTooLarge,
    SizeExceeded,
    PremiseFailed,
    Io,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonConvergent: return "NonConvergent";
    case ErrorKind::UnknownName: return "UnknownName";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::WindowTooSmall: return "WindowTooSmall";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::BisectionStall: return "BisectionStall";
    case ErrorKind::IterationBudgetExceeded: return "IterationBudgetExceeded";
    case ErrorKind::SparsenessViolated: return "SparsenessViolated";
    case ErrorKind::DiniViolated: return "DiniViolated";
    case ErrorKind::GridTooLarge: return "GridTooLarge";
    case ErrorKind::SizeExceeded: return "SizeExceeded";
    case ErrorKind::PremiseFailed: return "PremiseFailed";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Bennett premise failure carries the first violating prefix index.
class PremiseError : public Error {
public:
    explicit PremiseError(std::size_t m)
        : Error(ErrorKind::PremiseFailed, "premise violated at m = " + std::to_string(m)), m_(m) {}
    std::size_t first_violation() const noexcept { return m_; }

private:
    std::size_t m_;
};

} // namespace negbound
