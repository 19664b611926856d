#include "qkd/bb84.hpp"

#include <cmath>
#include <string>

#include "qkd/error.hpp"

namespace qkd {

std::string_view to_string(Verdict v) noexcept { return v == Verdict::KeyEstablished ? "KeyEstablished" : "Aborted"; }

std::pair<BitString, std::vector<Basis>> generate_random(std::size_t n, RandomSource& rng) {
  if (n == 0) throw Error(Errc::InvalidArgument, "n must be >= 1");
  BitString bits;
  bits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) bits.push_back(bit_from(rng.coin()));
  return {std::move(bits), random_bases(n, rng)};
}

std::vector<Basis> random_bases(std::size_t n, RandomSource& rng) {
  std::vector<Basis> bases;
  bases.reserve(n);
  for (std::size_t i = 0; i < n; ++i) bases.push_back(rng.coin() ? Basis::DAD : Basis::HV);
  return bases;
}

std::vector<std::uint32_t> sift(std::span<const Basis> alice_bases, std::span<const Basis> bob_bases) {
  if (alice_bases.size() != bob_bases.size()) throw Error(Errc::LengthMismatch, "basis sequences differ in length");
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < alice_bases.size(); ++i) {
    if (alice_bases[i] == bob_bases[i]) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

BitString extract_key(std::span<const Bit> bits, std::span<const std::uint32_t> matching_indices) {
  BitString key;
  key.reserve(matching_indices.size());
  for (std::uint32_t idx : matching_indices) {
    if (idx >= bits.size()) {
      throw Error(Errc::IndexOutOfRange, "index " + std::to_string(idx) + " beyond " + std::to_string(bits.size()) + " bits");
    }
    key.push_back(bits[idx]);
  }
  return key;
}

SampleOutcome sample_compare(std::span<const Bit> alice_key, std::span<const Bit> bob_key, std::size_t sample_len,
                             double threshold) {
  if (alice_key.size() != bob_key.size()) throw Error(Errc::LengthMismatch, "keys differ in length");
  if (sample_len == 0) throw Error(Errc::InvalidArgument, "sample_len must be >= 1");
  if (sample_len >= alice_key.size()) {
    throw Error(Errc::SampleTooLong,
                "sample of " + std::to_string(sample_len) + " bits leaves nothing of a " + std::to_string(alice_key.size()) + "-bit key");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(Errc::InvalidArgument, "threshold must lie in [0, 1]");

  SampleOutcome out;
  for (std::size_t i = 0; i < sample_len; ++i) {
    if (alice_key[i] != bob_key[i]) ++out.mismatches;
  }
  out.mismatch_rate = static_cast<double>(out.mismatches) / static_cast<double>(sample_len);
  if (out.mismatch_rate > threshold) {
    out.verdict = Verdict::Aborted;
    return out;
  }
  out.verdict = Verdict::KeyEstablished;
  out.alice_remaining.assign(alice_key.begin() + static_cast<std::ptrdiff_t>(sample_len), alice_key.end());
  out.bob_remaining.assign(bob_key.begin() + static_cast<std::ptrdiff_t>(sample_len), bob_key.end());
  return out;
}

double guess_probability(std::size_t key_len) {
  if (key_len > 2000) return 0.0;
  return std::ldexp(1.0, -static_cast<int>(key_len));
}

double guess_probability_log10(std::size_t key_len) { return -static_cast<double>(key_len) * std::log10(2.0); }

std::vector<std::uint8_t> otp_xor(std::span<const std::uint8_t> message, std::span<const Bit> key) {
  if (key.size() < 8 * message.size()) {
    throw Error(Errc::KeyTooShort, std::to_string(message.size()) + "-byte message needs " + std::to_string(8 * message.size()) +
                                       " key bits, have " + std::to_string(key.size()));
  }
  std::vector<std::uint8_t> out(message.begin(), message.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint8_t pad = 0;
    for (std::size_t b = 0; b < 8; ++b) pad = static_cast<std::uint8_t>((pad << 1) | static_cast<std::uint8_t>(key[8 * i + b]));
    out[i] ^= pad;
  }
  return out;
}

}  // namespace qkd
