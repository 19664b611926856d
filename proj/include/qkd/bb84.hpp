#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "qkd/polarization.hpp"
#include "qkd/random.hpp"

namespace qkd {

enum class Verdict { KeyEstablished, Aborted };
std::string_view to_string(Verdict v) noexcept;

struct AliceRecord {
  BitString bits;
  std::vector<Basis> bases;
};

struct BobRecord {
  std::vector<Basis> bases;
  std::vector<Trit> measured;
};

struct SiftResult {
  std::vector<std::uint32_t> matching_indices;
  BitString alice_key;
  BitString bob_key;
};

// n uniform bits, then n uniform bases, drawn in that order.
std::pair<BitString, std::vector<Basis>> generate_random(std::size_t n, RandomSource& rng);
std::vector<Basis> random_bases(std::size_t n, RandomSource& rng);

// 0-based positions where the two parties used the same basis.
std::vector<std::uint32_t> sift(std::span<const Basis> alice_bases, std::span<const Basis> bob_bases);

// Throws IndexOutOfRange.
BitString extract_key(std::span<const Bit> bits, std::span<const std::uint32_t> matching_indices);

struct SampleOutcome {
  double mismatch_rate = 0.0;
  std::size_t mismatches = 0;
  Verdict verdict = Verdict::Aborted;
  // Key material after the publicly revealed prefix; empty when aborted.
  BitString alice_remaining;
  BitString bob_remaining;
};

// Compares the first sample_len bits. Throws SampleTooLong when
// sample_len >= key length, LengthMismatch for unequal keys.
SampleOutcome sample_compare(std::span<const Bit> alice_key, std::span<const Bit> bob_key, std::size_t sample_len,
                             double threshold);

// 2^-key_len. Exact while representable, 0 beyond the double range; use
// guess_probability_log10 for very long keys.
double guess_probability(std::size_t key_len);
double guess_probability_log10(std::size_t key_len);

// XOR one-time pad, key bits consumed most-significant-bit first. Applying it
// twice restores the message. Throws KeyTooShort.
std::vector<std::uint8_t> otp_xor(std::span<const std::uint8_t> message, std::span<const Bit> key);

}  // namespace qkd
