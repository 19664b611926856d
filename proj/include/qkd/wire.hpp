#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "qkd/polarization.hpp"

// Classical-channel framing:
//   magic 0x51 0x4B | version 0x01 | msg_type | payload_len (u32 BE) | payload
// Packed bit sequences are preceded by a u32 BE count, first element in the
// most significant bit of the first byte, trailing pad bits zero.
namespace qkd::wire {

inline constexpr std::uint8_t kMagic0 = 0x51;
inline constexpr std::uint8_t kMagic1 = 0x4B;
inline constexpr std::uint8_t kFrameVersion = 0x01;
inline constexpr std::uint32_t kProtocolVersion = 1;
inline constexpr std::size_t kHeaderSize = 8;
inline constexpr std::uint32_t kMaxPayload = 16u * 1024u * 1024u;

enum class MsgType : std::uint8_t {
  Hello = 0x01,
  BasisAnnounce = 0x02,
  MatchIndices = 0x03,
  SampleBits = 0x04,
  Verdict = 0x05,
  Abort = 0x06,
  // Simulation extension for two-process runs without a physical quantum
  // channel. Not secure: it carries Bob's bases and his detector capture.
  SimBobBases = 0x10,
  SimTrace = 0x11,
};

enum class AbortReason : std::uint32_t {
  SampleMismatch = 1,
  ProtocolViolation = 2,
  OperatorAbort = 3,
};

struct Hello {
  std::uint32_t protocol_version = kProtocolVersion;
  std::uint32_t n_bits = 0;
  bool operator==(const Hello&) const = default;
};

struct BasisAnnounce {
  std::vector<Basis> bases;  // 0 = HV, 1 = DAD
  bool operator==(const BasisAnnounce&) const = default;
};

struct MatchIndices {
  std::vector<std::uint32_t> indices;  // strictly increasing
  bool operator==(const MatchIndices&) const = default;
};

struct SampleBits {
  std::uint32_t start = 0;
  BitString bits;
  bool operator==(const SampleBits&) const = default;
};

struct VerdictMsg {
  bool pass = false;
  std::uint32_t mismatch_rate_milli = 0;
  bool operator==(const VerdictMsg&) const = default;
};

struct Abort {
  std::uint32_t reason_code = 0;
  bool operator==(const Abort&) const = default;
};

struct SimBobBases {
  std::vector<Basis> bases;
  bool operator==(const SimBobBases&) const = default;
};

// Detector capture returned to Bob by the simulating peer; reals travel as
// IEEE-754 doubles, big-endian.
struct SimTrace {
  double sample_period_ns = 0.0;
  std::vector<double> ch1_volts;
  std::vector<double> ch2_volts;
  bool operator==(const SimTrace&) const = default;
};

using Message = std::variant<Hello, BasisAnnounce, MatchIndices, SampleBits, VerdictMsg, Abort, SimBobBases, SimTrace>;

MsgType type_of(const Message& msg) noexcept;
std::string_view to_string(MsgType type) noexcept;

// Canonical encoding. Throws MalformedPayload for messages violating their
// invariants (non-increasing indices, oversize payload).
std::vector<std::uint8_t> encode_message(const Message& msg);

struct Decoded {
  Message message;
  std::size_t consumed = 0;
};

struct NeedMoreData {
  std::size_t missing = 0;  // lower bound on additional bytes required
};

using DecodeResult = std::variant<Decoded, NeedMoreData>;

// Decodes the first frame of `bytes`, which may be partial or hold several
// frames. Throws BadMagic, UnsupportedVersion, UnknownType, PayloadTooLarge or
// MalformedPayload; never allocates more than the bytes actually present.
DecodeResult decode_message(std::span<const std::uint8_t> bytes);

}  // namespace qkd::wire
