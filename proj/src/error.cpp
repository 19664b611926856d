#include "qkd/error.hpp"

namespace qkd {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NotABasisState: return "NotABasisState";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::NonMonotonicTime: return "NonMonotonicTime";
    case Errc::NonUniformSpacing: return "NonUniformSpacing";
    case Errc::RowParseError: return "RowParseError";
    case Errc::SlotCountMismatch: return "SlotCountMismatch";
    case Errc::NoSignal: return "NoSignal";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::SampleTooLong: return "SampleTooLong";
    case Errc::KeyTooShort: return "KeyTooShort";
    case Errc::UnsiftableSession: return "UnsiftableSession";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::UnknownType: return "UnknownType";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::MalformedPayload: return "MalformedPayload";
    case Errc::ProtocolViolation: return "ProtocolViolation";
    case Errc::TransportClosed: return "TransportClosed";
    case Errc::VersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

namespace {
std::string format_what(Errc code, const std::string& what) {
  std::string out(to_string(code));
  if (!what.empty()) {
    out += ": ";
    out += what;
  }
  return out;
}
}  // namespace

Error::Error(Errc code, const std::string& what, std::optional<std::size_t> where)
    : std::runtime_error(format_what(code, what)), code_(code), where_(where) {}

}  // namespace qkd
