#include <doctest.h>

#include <cmath>
#include <limits>

#include "qkd/error.hpp"
#include "qkd/polarization.hpp"

using namespace qkd;

TEST_SUITE("polarization") {
  TEST_CASE("encoding table follows the H/V/D/AD assignment") {
    const EncodingTable table;
    CHECK(encode_state(Bit::Zero, Basis::HV, table).degrees() == 0.0);
    CHECK(encode_state(Bit::One, Basis::HV, table).degrees() == 90.0);
    CHECK(encode_state(Bit::Zero, Basis::DAD, table).degrees() == 45.0);
    CHECK(encode_state(Bit::One, Basis::DAD, table).degrees() == 135.0);
    CHECK(state_name(encode_state(Bit::One, Basis::DAD)) == "AD");
  }

  TEST_CASE("decode_state") {
    CHECK(decode_state(PolarizationAngle(90.0), Basis::HV) == Bit::One);
    CHECK(decode_state(PolarizationAngle(45.0), Basis::DAD) == Bit::Zero);
    CHECK(decode_state(PolarizationAngle(-45.0), Basis::DAD) == Bit::One);
    CHECK(decode_state(PolarizationAngle(90.0 + 5e-10), Basis::HV) == Bit::One);
    try {
      decode_state(PolarizationAngle(45.0), Basis::HV);
      FAIL("expected NotABasisState");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NotABasisState);
    }
  }

  TEST_CASE("round trip over every bit and basis") {
    for (Bit b : {Bit::Zero, Bit::One}) {
      for (Basis basis : {Basis::HV, Basis::DAD}) {
        CHECK(decode_state(encode_state(b, basis), basis) == b);
      }
    }
  }

  TEST_CASE("angles normalize into [0, 180)") {
    CHECK(PolarizationAngle(180.0).degrees() == 0.0);
    CHECK(PolarizationAngle(-45.0).degrees() == 135.0);
    CHECK(PolarizationAngle(405.0).degrees() == doctest::Approx(45.0));
    CHECK(PolarizationAngle(-1e-18).degrees() == 0.0);
    CHECK_THROWS_AS(PolarizationAngle(std::numeric_limits<double>::quiet_NaN()), Error);
    CHECK_THROWS_AS(PolarizationAngle(std::numeric_limits<double>::infinity()), Error);
  }

  TEST_CASE("transmission_fraction follows cos^2") {
    CHECK(transmission_fraction(PolarizationAngle(0), PolarizationAngle(0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(transmission_fraction(PolarizationAngle(0), PolarizationAngle(90)) < 1e-12);
    CHECK(std::fabs(transmission_fraction(PolarizationAngle(45), PolarizationAngle(0)) - 0.5) < 1e-12);
    CHECK(std::fabs(transmission_fraction(PolarizationAngle(30), PolarizationAngle(0)) - 0.75) < 1e-12);
  }

  TEST_CASE("channel conservation and 180-degree periodicity") {
    for (double theta = -270.0; theta <= 270.0; theta += 7.3) {
      for (Basis basis : {Basis::HV, Basis::DAD}) {
        const EncodingTable table;
        const double sum = transmission_fraction(PolarizationAngle(theta), table.angle(Bit::Zero, basis)) +
                           transmission_fraction(PolarizationAngle(theta), table.angle(Bit::One, basis));
        CHECK(std::fabs(sum - 1.0) < 1e-12);
      }
      const PolarizationAngle a(33.0);
      CHECK(std::fabs(transmission_fraction(PolarizationAngle(theta), a) -
                      transmission_fraction(PolarizationAngle(theta + 180.0), a)) < 1e-12);
    }
  }

  TEST_CASE("measure_photon on eigenstates is deterministic and collapse is idempotent") {
    RandomSource rng(42);
    const EncodingTable table;
    for (int i = 0; i < 1000; ++i) {
      const auto h = measure_photon(PolarizationAngle(0), Basis::HV, table, rng);
      CHECK(h.bit == Bit::Zero);
      CHECK(h.collapsed.degrees() == 0.0);
      CHECK(measure_photon(PolarizationAngle(90), Basis::HV, table, rng).bit == Bit::One);

      const auto first = measure_photon(PolarizationAngle(0), Basis::DAD, table, rng);
      CHECK((first.collapsed.approx_equal(PolarizationAngle(45)) || first.collapsed.approx_equal(PolarizationAngle(135))));
      const auto again = measure_photon(first.collapsed, Basis::DAD, table, rng);
      CHECK(again.bit == first.bit);
    }
  }

  TEST_CASE("cross-basis measurement is a fair coin") {
    RandomSource rng(2024);
    const EncodingTable table;
    const int trials = 100000;
    int zeros = 0;
    for (int i = 0; i < trials; ++i) zeros += measure_photon(PolarizationAngle(0), Basis::DAD, table, rng).bit == Bit::Zero;
    const double sigma = std::sqrt(trials * 0.25);
    CHECK(std::fabs(zeros - trials / 2.0) <= 3.0 * sigma);
  }

  TEST_CASE("custom encoding tables are validated") {
    using A = PolarizationAngle;
    CHECK_NOTHROW(EncodingTable({{{A(10), A(100)}, {A(55), A(145)}}}));
    CHECK_THROWS_AS(EncodingTable({{{A(0), A(80)}, {A(45), A(135)}}}), Error);
    CHECK_THROWS_AS(EncodingTable({{{A(0), A(90)}, {A(0), A(90)}}}), Error);
  }

  TEST_CASE("string helpers") {
    CHECK(to_string(parse_bits("0110")) == "0110");
    CHECK_THROWS_AS(parse_bits("01x"), Error);
    CHECK(parse_bases("hd") == std::vector<Basis>{Basis::HV, Basis::DAD});
    CHECK(parse_basis("dad") == Basis::DAD);
    CHECK(to_string(std::vector<Trit>{Trit::Zero, Trit::Uncertain, Trit::One}) == "0?1");
  }
}
