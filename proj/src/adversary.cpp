#include "qkd/adversary.hpp"

#include <cmath>

#include "qkd/error.hpp"

namespace qkd {

void EveConfig::validate() const {
  if (!(tap_fraction >= 0.0 && tap_fraction <= 1.0)) throw Error(Errc::InvalidConfig, "tap_fraction must lie in [0, 1]");
  if (mode == EveMode::Photon && photon_count < 1) {
    throw Error(Errc::InvalidConfig, "photon_count must be >= 1 in photon mode");
  }
}

Eavesdropper::Eavesdropper(EveConfig config, EncodingTable table)
    : config_(config), table_(table), rng_(config.seed_eve) {
  config_.validate();
}

void Eavesdropper::set_tap_fraction(double tap) {
  EveConfig next = config_;
  next.tap_fraction = tap;
  next.validate();
  config_ = next;
}

Beam Eavesdropper::intercept(const Beam& beam, std::size_t slot) {
  EveRecord record;
  record.slot = slot;
  // tap 0 and tap 1 consume no randomness for the tap decision
  const bool tapped = config_.tap_fraction >= 1.0 || (config_.tap_fraction > 0.0 && rng_.uniform() < config_.tap_fraction);
  if (!tapped) {
    transcript_.push_back(record);
    return beam;
  }

  const Basis basis = forced_basis_ ? *forced_basis_ : (rng_.coin() ? Basis::DAD : Basis::HV);
  Bit guess = Bit::Zero;
  if (config_.mode == EveMode::Beam) {
    guess = measure_photon(beam.angle, basis, table_, rng_).bit;
  } else {
    int ones = 0;
    for (int p = 0; p < config_.photon_count; ++p) {
      if (measure_photon(beam.angle, basis, table_, rng_).bit == Bit::One) ++ones;
    }
    const int zeros = config_.photon_count - ones;
    guess = ones == zeros ? bit_from(rng_.coin()) : bit_from(ones > zeros);
  }

  record.tapped = true;
  record.basis = basis;
  record.guessed_bit = guess;
  transcript_.push_back(record);

  Beam resent = beam;
  resent.intensity = 1.0;
  resent.angle = table_.angle(guess, basis);
  return resent;
}

double expected_qber(double tap_fraction) {
  if (!(tap_fraction >= 0.0 && tap_fraction <= 1.0)) throw Error(Errc::InvalidArgument, "tap_fraction must lie in [0, 1]");
  return tap_fraction / 4.0;
}

double detection_probability(double tap_fraction, std::size_t sample_len) {
  const double clean = 1.0 - expected_qber(tap_fraction);
  return 1.0 - std::pow(clean, static_cast<double>(sample_len));
}

}  // namespace qkd
