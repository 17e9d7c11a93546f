#pragma once

#include <stdexcept>
#include <string>

namespace compop {

enum class ErrorKind {
    InvalidConfig,
    UndefinedAngle,
    Degenerate,
    RankDeficient,
    UnwrapAmbiguity,
    Domain,
    Feasibility,
    EmptySpectrum,
    DuplicateLabel,
    Parse,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (and the
/// CLI) can tell a bad configuration from a degenerate geometry.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace compop
