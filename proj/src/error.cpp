#include "zenesis/error.hpp"

namespace zenesis {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::UnreadableFile: return "UnreadableFile";
    case Errc::UnsupportedLayout: return "UnsupportedLayout";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::EmptyPrompt: return "EmptyPrompt";
    case Errc::BackendUnavailable: return "BackendUnavailable";
    case Errc::DegenerateBox: return "DegenerateBox";
    case Errc::EmptyHistory: return "EmptyHistory";
    case Errc::EmptySegments: return "EmptySegments";
    case Errc::UnknownRecord: return "UnknownRecord";
    case Errc::NoParentBox: return "NoParentBox";
    case Errc::NotAChild: return "NotAChild";
    case Errc::EmptyHistogram: return "EmptyHistogram";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NotFound: return "NotFound";
    case Errc::Protocol: return "Protocol";
    case Errc::Cancelled: return "Cancelled";
  }
  return "Unknown";
}

}  // namespace zenesis
