#include <doctest.h>

#include <cmath>

#include "qkd/adversary.hpp"
#include "qkd/error.hpp"
#include "qkd/session.hpp"

using namespace qkd;

namespace {
Beam polarized(double deg) {
  Beam b;
  b.angle = PolarizationAngle(deg);
  return b;
}

struct Pooled {
  std::size_t sifted = 0;
  std::size_t errors = 0;
  std::size_t tapped = 0;
  std::size_t eve_right = 0;
};

Pooled pooled_run(double tap, int sessions) {
  Pooled p;
  PipelineConfig pipe;
  pipe.noise_sigma_volts = 0.0;
  SessionConfig cfg;
  cfg.n_bits = 1000;
  cfg.sample_len = 100;
  for (int s = 0; s < sessions; ++s) {
    cfg.seed_alice = 1000 + s;
    cfg.seed_bob = 5000 + s;
    pipe.seed = 9000 + s;
    EveConfig eve;
    eve.tap_fraction = tap;
    eve.seed_eve = 13000 + s;
    const auto out = run_session(cfg, pipe, eve, decoder_for(pipe));
    const auto& t = out.transcript;
    p.sifted += t.alice_sifted.size();
    for (std::size_t i = 0; i < t.alice_sifted.size(); ++i) p.errors += t.alice_sifted[i] != t.bob_sifted[i];
    for (const auto& row : t.rows) {
      if (row.eve && row.eve->tapped) {
        ++p.tapped;
        p.eve_right += *row.eve->guessed_bit == row.alice_bit;
      }
    }
  }
  return p;
}
}  // namespace

TEST_SUITE("adversary") {
  TEST_CASE("config validation") {
    EveConfig c;
    CHECK_NOTHROW(c.validate());
    c.tap_fraction = 1.5;
    CHECK_THROWS_AS(c.validate(), Error);
    c.tap_fraction = -0.1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.mode = EveMode::Photon;
    c.photon_count = 0;
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("tap 0 is the identity") {
    EveConfig c;
    c.tap_fraction = 0.0;
    Eavesdropper eve(c);
    for (double deg : {0.0, 45.0, 90.0, 135.0, 17.0}) {
      const Beam in = polarized(deg);
      const Beam out = eve.intercept(in, 0);
      CHECK(out.angle == in.angle);
      CHECK(out.intensity == in.intensity);
    }
    for (const auto& r : eve.transcript()) CHECK_FALSE(r.tapped);
  }

  TEST_CASE("matching basis resends the same state") {
    for (Basis basis : {Basis::HV, Basis::DAD}) {
      for (Bit bit : {Bit::Zero, Bit::One}) {
        Eavesdropper eve(EveConfig{1.0, 4});
        eve.force_basis(basis);
        for (std::size_t slot = 0; slot < 50; ++slot) {
          const auto state = encode_state(bit, basis);
          const Beam out = eve.intercept(polarized(state.degrees()), slot);
          CHECK(out.angle == state);
          CHECK(*eve.transcript().back().guessed_bit == bit);
        }
      }
    }
  }

  TEST_CASE("wrong basis resends a uniform eigenstate of that basis") {
    Eavesdropper eve(EveConfig{1.0, 8});
    eve.force_basis(Basis::DAD);
    const int n = 20000;
    int d = 0;
    for (int i = 0; i < n; ++i) {
      const Beam out = eve.intercept(polarized(0.0), static_cast<std::size_t>(i));
      CHECK(out.intensity == 1.0);
      const bool is_d = out.angle.approx_equal(PolarizationAngle(45.0));
      CHECK((is_d || out.angle.approx_equal(PolarizationAngle(135.0))));
      d += is_d;
    }
    CHECK(std::abs(d - n / 2.0) < 3 * std::sqrt(n * 0.25));
  }

  TEST_CASE("tap fraction controls the tapped share") {
    Eavesdropper eve(EveConfig{0.3, 21});
    const int n = 20000;
    for (int i = 0; i < n; ++i) eve.intercept(polarized(90.0), static_cast<std::size_t>(i));
    int tapped = 0;
    for (const auto& r : eve.transcript()) tapped += r.tapped;
    CHECK(std::abs(tapped - 0.3 * n) < 3 * std::sqrt(n * 0.21));
  }

  TEST_CASE("photon mode majority") {
    EveConfig c{1.0, 2, EveMode::Photon, 9};
    Eavesdropper eve(c);
    eve.force_basis(Basis::HV);
    const Beam out = eve.intercept(polarized(90.0), 0);
    CHECK(out.angle == PolarizationAngle(90.0));
  }

  TEST_CASE("closed forms") {
    CHECK(expected_qber(0.0) == 0.0);
    CHECK(expected_qber(1.0) == 0.25);
    CHECK(expected_qber(0.5) == 0.125);
    CHECK(detection_probability(0.7, 0) == 0.0);
    CHECK(detection_probability(0.0, 100) == 0.0);
    CHECK(detection_probability(1.0, 100) == doctest::Approx(1.0 - std::pow(0.75, 100)).epsilon(1e-15));
    CHECK(1.0 - detection_probability(1.0, 100) == doctest::Approx(3.2072e-13).epsilon(1e-3));
  }

  TEST_CASE("sifted error rate and Eve knowledge by Monte Carlo") {
    for (double tap : {1.0, 0.5}) {
      const Pooled p = pooled_run(tap, 120);
      const double q = expected_qber(tap);
      const double rate = static_cast<double>(p.errors) / p.sifted;
      CHECK(std::abs(rate - q) < 3 * std::sqrt(q * (1 - q) / p.sifted));
      const double known = static_cast<double>(p.eve_right) / p.tapped;
      CHECK(std::abs(known - 0.75) < 3 * std::sqrt(0.1875 / p.tapped));
    }
    const Pooled none = pooled_run(0.0, 10);
    CHECK(none.errors == 0);
    CHECK(none.tapped == 0);
  }
}
