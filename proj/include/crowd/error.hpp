#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crowd {

enum class Errc {
    MalformedRow,
    UnknownStage,
    NegativeEstimate,
    ConfidenceOutOfRange,
    EmptyInput,
    DegenerateDispersion,
    MissingRevised,
    MissingConfidence,
    NonPositiveEstimate,
    AllExcluded,
    InsufficientGroups,
    InsufficientData,
    AllZeroDifferences,
    DivisionByZero,
    InvalidArgument,
    Io,
};

const char* errc_name(Errc c) noexcept;

// line is 1-based and only meaningful for parse errors (0 = not applicable)
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what, std::size_t line = 0);

    Errc code() const noexcept { return code_; }
    std::size_t line() const noexcept { return line_; }

private:
    Errc code_;
    std::size_t line_;
};

}  // namespace crowd
