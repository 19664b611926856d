#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qkd {

enum class Errc {
  InvalidArgument,
  InvalidConfig,
  NotABasisState,
  LengthMismatch,
  MalformedHeader,
  NonMonotonicTime,
  NonUniformSpacing,
  RowParseError,
  SlotCountMismatch,
  NoSignal,
  IndexOutOfRange,
  SampleTooLong,
  KeyTooShort,
  UnsiftableSession,
  BadMagic,
  UnsupportedVersion,
  UnknownType,
  PayloadTooLarge,
  MalformedPayload,
  ProtocolViolation,
  TransportClosed,
  VersionMismatch,
};

std::string_view to_string(Errc code) noexcept;

// Every failure in the library surfaces as qkd::Error. `where` carries the
// line number (trace parsing) or slot index (decoding) when one applies.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::optional<std::size_t> where = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> where() const noexcept { return where_; }

 private:
  Errc code_;
  std::optional<std::size_t> where_;
};

}  // namespace qkd
