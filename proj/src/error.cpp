#include "crowd/error.hpp"

namespace crowd {

const char* errc_name(Errc c) noexcept {
    switch (c) {
        case Errc::MalformedRow: return "MalformedRow";
        case Errc::UnknownStage: return "UnknownStage";
        case Errc::NegativeEstimate: return "NegativeEstimate";
        case Errc::ConfidenceOutOfRange: return "ConfidenceOutOfRange";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::DegenerateDispersion: return "DegenerateDispersion";
        case Errc::MissingRevised: return "MissingRevised";
        case Errc::MissingConfidence: return "MissingConfidence";
        case Errc::NonPositiveEstimate: return "NonPositiveEstimate";
        case Errc::AllExcluded: return "AllExcluded";
        case Errc::InsufficientGroups: return "InsufficientGroups";
        case Errc::InsufficientData: return "InsufficientData";
        case Errc::AllZeroDifferences: return "AllZeroDifferences";
        case Errc::DivisionByZero: return "DivisionByZero";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& what, std::size_t line)
    : std::runtime_error(what), code_(code), line_(line) {}

}  // namespace crowd
