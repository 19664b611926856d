#include <doctest.h>

#include <cmath>

#include "qkd/adversary.hpp"
#include "qkd/error.hpp"
#include "qkd/optics.hpp"

using namespace qkd;

namespace {
// Reference normalization, kept apart from PolarizationAngle.
double wrap180(double deg) {
  double d = std::fmod(deg, 180.0);
  return d < 0 ? d + 180.0 : d;
}

PipelineConfig noiseless() {
  PipelineConfig c;
  c.noise_sigma_volts = 0.0;
  return c;
}
}  // namespace

TEST_SUITE("optics") {
  TEST_CASE("pipeline config limits follow the laser's 6-39 ns range") {
    PipelineConfig c;
    CHECK_NOTHROW(c.validate());
    c.pulse_width_ns = 50;
    CHECK_THROWS_AS(c.validate(), Error);
    c.pulse_width_ns = 6;
    CHECK_NOTHROW(c.validate());
    const Beam b = laser_pulse(c);
    CHECK(b.intensity == 1.0);
    CHECK_FALSE(b.polarized);
    c.samples_per_slot = 4;
    CHECK_THROWS_AS(c.validate(), Error);
    c = PipelineConfig{};
    c.noise_sigma_volts = -1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = PipelineConfig{};
    c.slot_period_ns = 20;
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("inline polarizer sets the H reference frame") {
    const Beam out = inline_polarizer(laser_pulse(PipelineConfig{}));
    CHECK(out.polarized);
    CHECK(out.angle.degrees() == 0.0);
    CHECK(out.intensity == 1.0);
    CHECK_FALSE(out.warning);
    CHECK_FALSE(inline_polarizer(out).warning);
    const Beam off = inline_polarizer(Beam{1.0, PolarizationAngle(30), true});
    CHECK(off.angle.degrees() == 0.0);
    CHECK(off.warning);
  }

  TEST_CASE("rotators") {
    const Beam h{1.0, PolarizationAngle(0), true};
    CHECK(alice_rotator(h, Bit::One, Basis::HV).angle.degrees() == 90.0);
    CHECK(alice_rotator(h, Bit::Zero, Basis::HV).angle.degrees() == 0.0);
    CHECK(alice_rotator(h, Bit::One, Basis::DAD).angle.degrees() == 135.0);
    CHECK(bob_rotator(Beam{1.0, PolarizationAngle(45), true}, Basis::DAD).angle.degrees() == 0.0);
    CHECK(bob_rotator(h, Basis::HV).angle.degrees() == 0.0);
    CHECK(bob_rotator(h, Basis::DAD).angle.degrees() == wrap180(0.0 - 45.0));
    CHECK_THROWS_AS(alice_rotator(laser_pulse(PipelineConfig{}), Bit::One, Basis::HV), Error);
  }

  TEST_CASE("beamsplitter routes V to ch1 and H to ch2") {
    auto v = pbs_split(Beam{1.0, PolarizationAngle(90), true});
    CHECK(v.ch1 == doctest::Approx(1.0));
    CHECK(v.ch2 < 1e-12);
    auto h = pbs_split(Beam{1.0, PolarizationAngle(0), true});
    CHECK(h.ch1 < 1e-12);
    CHECK(h.ch2 == doctest::Approx(1.0));
    auto d = pbs_split(Beam{1.0, PolarizationAngle(45), true});
    CHECK(d.ch1 == doctest::Approx(0.5));
    CHECK(d.ch2 == doctest::Approx(0.5));
    for (double a = 0; a < 180; a += 3.7) {
      const auto s = pbs_split(Beam{0.8, PolarizationAngle(a), true});
      CHECK(std::fabs(s.ch1 + s.ch2 - 0.8) < 1e-12);
    }
  }

  TEST_CASE("detector trace levels") {
    PipelineConfig c = noiseless();
    RandomSource rng(1);
    const ChannelPair one[] = {{1.0, 0.0}};
    const Trace t = detector_trace(one, c, rng);
    REQUIRE(t.ch1_volts.size() == 64);
    REQUIRE(t.ch2_volts.size() == 64);
    CHECK(t.sample_period_ns == doctest::Approx(100.0 / 64));
    for (int j = 0; j < 64; ++j) {
      const bool pulse = j * t.sample_period_ns < c.pulse_width_ns;
      CHECK(t.ch1_volts[j] == (pulse ? 1.0 : 0.0));
      CHECK(t.ch2_volts[j] == 0.0);
    }
    const ChannelPair half[] = {{0.5, 0.5}};
    const Trace h = detector_trace(half, c, rng);
    CHECK(h.ch1_volts[0] == 0.5);
    CHECK(h.ch2_volts[0] == 0.5);
    const ChannelPair bad[] = {{1.5, 0.0}};
    CHECK_THROWS_AS(detector_trace(bad, c, rng), Error);
  }

  TEST_CASE("noisy traces are reproducible per seed") {
    PipelineConfig c;
    const ChannelPair slots[] = {{1.0, 0.0}, {0.5, 0.5}, {0.0, 1.0}};
    RandomSource a(99), b(99), other(100);
    const Trace t1 = detector_trace(slots, c, a);
    const Trace t2 = detector_trace(slots, c, b);
    const Trace t3 = detector_trace(slots, c, other);
    CHECK(t1.ch1_volts == t2.ch1_volts);
    CHECK(t1.ch2_volts == t2.ch2_volts);
    CHECK(t1.ch1_volts != t3.ch1_volts);
  }

  TEST_CASE("simulate_transmission slot intensities") {
    const PipelineConfig c = noiseless();
    RandomSource rng(3);
    const Bit b0[] = {Bit::Zero};
    const Basis hv[] = {Basis::HV};
    const Basis dad[] = {Basis::DAD};
    auto same = simulate_transmission(b0, hv, hv, nullptr, c, rng);
    CHECK(same.intensities[0].ch1 < 1e-12);
    CHECK(same.intensities[0].ch2 == doctest::Approx(1.0));

    const Bit b1[] = {Bit::One};
    auto cross = simulate_transmission(b1, dad, hv, nullptr, c, rng);
    CHECK(cross.intensities[0].ch1 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(cross.intensities[0].ch2 == doctest::Approx(0.5).epsilon(1e-12));

    const Basis two[] = {Basis::HV, Basis::HV};
    CHECK_THROWS_AS(simulate_transmission(b0, hv, two, nullptr, c, rng), Error);
  }

  TEST_CASE("frame correctness and cross-basis split over all combinations") {
    for (bool swap : {false, true}) {
      PipelineConfig c = noiseless();
      c.swap_channels = swap;
      RandomSource rng(5);
      for (Bit bit : {Bit::Zero, Bit::One}) {
        for (Basis a : {Basis::HV, Basis::DAD}) {
          for (Basis b : {Basis::HV, Basis::DAD}) {
            const ChannelPair p = propagate_slot(0, bit, a, b, nullptr, c, rng);
            CHECK(std::fabs(p.ch1 + p.ch2 - 1.0) < 1e-12);
            const double one_port = swap ? p.ch2 : p.ch1;
            if (a == b) {
              CHECK((bit == Bit::One ? one_port : 1.0 - one_port) >= 0.999999);
            } else {
              CHECK(p.ch1 == doctest::Approx(0.5).epsilon(1e-12));
            }
          }
        }
      }
    }
  }

  TEST_CASE("a 90 degree drift flips every certain slot") {
    PipelineConfig ideal = noiseless();
    PipelineConfig drifted = ideal;
    drifted.drift_offset_deg = 90.0;
    RandomSource rng(8);
    for (Bit bit : {Bit::Zero, Bit::One}) {
      for (Basis basis : {Basis::HV, Basis::DAD}) {
        const auto p0 = propagate_slot(0, bit, basis, basis, nullptr, ideal, rng);
        const auto p1 = propagate_slot(0, bit, basis, basis, nullptr, drifted, rng);
        CHECK(p0.ch1 == doctest::Approx(p1.ch2));
        CHECK(p0.ch2 == doctest::Approx(p1.ch1));
      }
    }
  }

  TEST_CASE("per-photon mode samples the beamsplitter") {
    PipelineConfig c = noiseless();
    c.photons_per_pulse = 4000;
    RandomSource rng(12);
    const auto matched = propagate_slot(0, Bit::One, Basis::HV, Basis::HV, nullptr, c, rng);
    CHECK(matched.ch1 == 1.0);
    const auto crossed = propagate_slot(0, Bit::One, Basis::DAD, Basis::HV, nullptr, c, rng);
    // binomial(4000, 0.5): sigma = 1/sqrt(16000) ~ 0.0079
    CHECK(std::fabs(crossed.ch1 - 0.5) < 4 * 0.0079);
    CHECK(crossed.ch1 + crossed.ch2 == doctest::Approx(1.0));
  }
}
