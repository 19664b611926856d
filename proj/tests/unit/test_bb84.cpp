#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "qkd/bb84.hpp"
#include "qkd/error.hpp"
#include "qkd/paper_vector.hpp"

using namespace qkd;

namespace {
std::vector<std::uint32_t> published_indices() {
  return {paper_vector::kMatchingIndices.begin(), paper_vector::kMatchingIndices.end()};
}

template <class F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::InvalidArgument;
}
}  // namespace

TEST_SUITE("bb84") {
  TEST_CASE("generate_random is reproducible") {
    RandomSource a(5), b(5), c(6);
    const auto x = generate_random(5, a);
    const auto y = generate_random(5, b);
    CHECK(x == y);
    CHECK(x.first.size() == 5);
    CHECK(x.second.size() == 5);
    const auto z = generate_random(64, c);
    const auto w = generate_random(64, a);
    CHECK(z != w);
  }

  TEST_CASE("generate_random is balanced") {
    RandomSource rng(123);
    const std::size_t n = 200000;
    const auto [bits, bases] = generate_random(n, rng);
    std::size_t ones = 0, dad = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ones += bits[i] == Bit::One;
      dad += bases[i] == Basis::DAD;
    }
    const double sigma = std::sqrt(n * 0.25);
    CHECK(std::abs(static_cast<double>(ones) - n / 2.0) < 4 * sigma);
    CHECK(std::abs(static_cast<double>(dad) - n / 2.0) < 4 * sigma);
  }

  TEST_CASE("sift") {
    const auto hv = std::vector<Basis>(6, Basis::HV);
    const auto dad = std::vector<Basis>(6, Basis::DAD);
    CHECK(sift(hv, dad).empty());
    CHECK(sift(hv, hv) == std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5});
    CHECK(sift({}, {}).empty());
    CHECK(error_of([&] { sift(hv, std::vector<Basis>(5, Basis::HV)); }) == Errc::LengthMismatch);

    const auto prepared = paper_vector::prepared_session();
    CHECK(prepared.bob_bases == parse_bases(paper_vector::kBobBases));
    CHECK(sift(prepared.alice.bases, prepared.bob_bases) == published_indices());
  }

  TEST_CASE("extract_key on the published vector") {
    const auto indices = published_indices();
    CHECK(to_string(extract_key(parse_bits(paper_vector::kKey), indices)) == paper_vector::kDesiredOutput);
    CHECK(to_string(extract_key(parse_bits(paper_vector::kPossibleMeasured), indices)) ==
          paper_vector::kDesiredOutput);
    CHECK(extract_key(parse_bits("1011"), {}).empty());
    CHECK(error_of([] { extract_key(parse_bits("1011"), std::vector<std::uint32_t>{4}); }) == Errc::IndexOutOfRange);
  }

  TEST_CASE("sample_compare") {
    const auto key = parse_bits("110010001101000");
    const auto ok = sample_compare(key, key, 5, 0.0);
    CHECK(ok.mismatch_rate == 0.0);
    CHECK(ok.verdict == Verdict::KeyEstablished);
    CHECK(to_string(ok.alice_remaining) == "0001101000");
    CHECK(ok.bob_remaining == ok.alice_remaining);

    const auto a = parse_bits("0000000011");
    const auto b = parse_bits("0100100011");
    const auto bad = sample_compare(a, b, 8, 0.0);
    CHECK(bad.mismatch_rate == 0.25);
    CHECK(bad.mismatches == 2);
    CHECK(bad.verdict == Verdict::Aborted);
    CHECK(bad.alice_remaining.empty());
    CHECK(bad.bob_remaining.empty());

    // threshold is inclusive
    CHECK(sample_compare(a, b, 8, 0.25).verdict == Verdict::KeyEstablished);
    CHECK(sample_compare(a, b, 8, 0.2499).verdict == Verdict::Aborted);

    CHECK(error_of([&] { sample_compare(a, b, 10, 0.0); }) == Errc::SampleTooLong);
    CHECK(error_of([&] { sample_compare(a, b, 0, 0.0); }) == Errc::InvalidArgument);
    CHECK(error_of([&] { sample_compare(a, parse_bits("01"), 1, 0.0); }) == Errc::LengthMismatch);
  }

  TEST_CASE("guess_probability") {
    CHECK(guess_probability(0) == 1.0);
    CHECK(guess_probability(1) == 0.5);
    CHECK(guess_probability(8) == 1.0 / 256.0);
    CHECK(std::abs(guess_probability(100) / 7.888609052210118e-31 - 1.0) < 1e-12);
    CHECK(guess_probability(5000) == 0.0);
    CHECK(guess_probability_log10(5000) == doctest::Approx(-5000 * std::log10(2.0)));
    for (std::size_t n = 0; n < 60; ++n) CHECK(guess_probability(n) == 1.0 / static_cast<double>(1ull << n));
  }

  TEST_CASE("one-time pad") {
    const std::vector<std::uint8_t> ff{0xFF};
    CHECK(otp_xor(ff, parse_bits("10101010")) == std::vector<std::uint8_t>{0x55});
    CHECK(otp_xor(ff, parse_bits("00000000")) == ff);

    RandomSource rng(3);
    std::vector<std::uint8_t> msg(37);
    for (auto& b : msg) b = static_cast<std::uint8_t>(rng.next_u64());
    const auto [key, unused] = generate_random(msg.size() * 8 + 5, rng);
    const auto cipher = otp_xor(msg, key);
    CHECK(cipher != msg);
    CHECK(otp_xor(cipher, key) == msg);
    CHECK(otp_xor({}, {}).empty());
    CHECK(error_of([&] { otp_xor(msg, parse_bits("1010")); }) == Errc::KeyTooShort);
  }
}
