#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "qkd/session.hpp"

// The published 24-bit test case: transmitted key, the basis agreement
// pattern, one possible raw reading by Bob, and the expected sifted key.
namespace qkd::paper_vector {

inline constexpr std::string_view kKey = "110110001001001101110100";
inline constexpr std::string_view kBobBases = "hhdhddhhhdhhdhddhdhdhdhd";
inline constexpr std::array<std::uint32_t, 15> kMatchingIndices = {1, 4, 6, 7, 8, 10, 12, 13, 14, 15, 16, 19, 20, 22, 23};
inline constexpr std::string_view kPossibleMeasured = "010111001001001101010100";
inline constexpr std::string_view kDesiredOutput = "110010001101000";

// Alice's bases are rebuilt from Bob's so that they agree exactly at the
// published matching indices; the printed Alice basis string is one
// character short and cannot be used directly.
PreparedSession prepared_session(bool use_published_measurement = true);

}  // namespace qkd::paper_vector
