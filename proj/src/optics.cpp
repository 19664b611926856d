#include "qkd/optics.hpp"

#include <cmath>
#include <string>

#include "qkd/adversary.hpp"
#include "qkd/error.hpp"

namespace qkd {

void PipelineConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::InvalidConfig, msg); };
  if (!std::isfinite(pulse_width_ns) || pulse_width_ns < 6.0 || pulse_width_ns > 39.0) {
    fail("pulse_width_ns must lie in [6, 39]");
  }
  if (!std::isfinite(slot_period_ns) || pulse_width_ns >= slot_period_ns) {
    fail("pulse_width_ns must be shorter than slot_period_ns");
  }
  if (samples_per_slot < 8) fail("samples_per_slot must be >= 8");
  if (!std::isfinite(full_scale_volts) || full_scale_volts <= 0.0) fail("full_scale_volts must be positive");
  if (!std::isfinite(noise_sigma_volts) || noise_sigma_volts < 0.0) fail("noise_sigma_volts must be >= 0");
  if (!std::isfinite(drift_offset_deg)) fail("drift_offset_deg must be finite");
  if (photons_per_pulse < 0) fail("photons_per_pulse must be >= 0");
}

Beam laser_pulse(const PipelineConfig& config) {
  config.validate();
  return Beam{1.0, PolarizationAngle(0.0), false, false};
}

Beam inline_polarizer(const Beam& beam) {
  const bool off_axis = beam.polarized && !beam.angle.approx_equal(PolarizationAngle(0.0));
  return Beam{1.0, PolarizationAngle(0.0), true, off_axis};
}

namespace {
void require_polarized(const Beam& beam) {
  if (!beam.polarized) throw Error(Errc::InvalidArgument, "beam must pass the inline polarizer first");
}
}  // namespace

Beam alice_rotator(const Beam& beam, Bit bit, Basis basis, const EncodingTable& table) {
  require_polarized(beam);
  Beam out = beam;
  out.angle = encode_state(bit, basis, table);
  return out;
}

Beam bob_rotator(const Beam& beam, Basis basis) {
  require_polarized(beam);
  Beam out = beam;
  if (basis == Basis::DAD) out.angle = beam.angle.rotated(-45.0);
  return out;
}

ChannelPair pbs_split(const Beam& beam) {
  require_polarized(beam);
  return ChannelPair{beam.intensity * transmission_fraction(beam.angle, PolarizationAngle(90.0)),
                     beam.intensity * transmission_fraction(beam.angle, PolarizationAngle(0.0))};
}

Trace detector_trace(std::span<const ChannelPair> slot_intensities, const PipelineConfig& config, RandomSource& rng) {
  config.validate();
  const auto per_slot = static_cast<std::size_t>(config.samples_per_slot);
  const double dt = config.sample_period_ns();

  Trace trace;
  trace.sample_period_ns = dt;
  trace.ch1_volts.reserve(slot_intensities.size() * per_slot);
  trace.ch2_volts.reserve(slot_intensities.size() * per_slot);
  for (const ChannelPair& slot : slot_intensities) {
    if (!(slot.ch1 >= 0.0 && slot.ch1 <= 1.0 + 1e-12 && slot.ch2 >= 0.0 && slot.ch2 <= 1.0 + 1e-12)) {
      throw Error(Errc::InvalidArgument, "slot intensities must lie in [0, 1]");
    }
    for (std::size_t j = 0; j < per_slot; ++j) {
      const bool in_pulse = static_cast<double>(j) * dt < config.pulse_width_ns;
      const double level1 = in_pulse ? slot.ch1 * config.full_scale_volts : 0.0;
      const double level2 = in_pulse ? slot.ch2 * config.full_scale_volts : 0.0;
      trace.ch1_volts.push_back(level1 + rng.gaussian(config.noise_sigma_volts));
      trace.ch2_volts.push_back(level2 + rng.gaussian(config.noise_sigma_volts));
    }
  }
  return trace;
}

ChannelPair propagate_slot(std::size_t slot, Bit bit, Basis alice_basis, Basis bob_basis, Eavesdropper* eve,
                           const PipelineConfig& config, RandomSource& rng, const EncodingTable& table) {
  Beam beam = inline_polarizer(laser_pulse(config));
  beam = alice_rotator(beam, bit, alice_basis, table);
  if (config.drift_offset_deg != 0.0) beam.angle = beam.angle.rotated(config.drift_offset_deg);
  if (eve != nullptr) beam = eve->intercept(beam, slot);
  beam = bob_rotator(beam, bob_basis);

  ChannelPair out;
  if (config.photons_per_pulse > 0) {
    // The beamsplitter is a fixed HV measurement on every photon.
    int vertical = 0;
    for (int p = 0; p < config.photons_per_pulse; ++p) {
      if (measure_photon(beam.angle, Basis::HV, EncodingTable{}, rng).bit == Bit::One) ++vertical;
    }
    const double frac = static_cast<double>(vertical) / config.photons_per_pulse;
    out = ChannelPair{beam.intensity * frac, beam.intensity * (1.0 - frac)};
  } else {
    out = pbs_split(beam);
  }
  if (config.swap_channels) std::swap(out.ch1, out.ch2);
  return out;
}

Transmission simulate_transmission(std::span<const Bit> alice_bits, std::span<const Basis> alice_bases,
                                   std::span<const Basis> bob_bases, Eavesdropper* eve,
                                   const PipelineConfig& config, RandomSource& rng, const EncodingTable& table) {
  config.validate();
  if (alice_bits.size() != alice_bases.size() || alice_bits.size() != bob_bases.size()) {
    throw Error(Errc::LengthMismatch, "bits, Alice bases and Bob bases must have equal length");
  }
  if (alice_bits.empty()) throw Error(Errc::InvalidArgument, "at least one slot is required");

  Transmission out;
  out.intensities.reserve(alice_bits.size());
  for (std::size_t i = 0; i < alice_bits.size(); ++i) {
    out.intensities.push_back(propagate_slot(i, alice_bits[i], alice_bases[i], bob_bases[i], eve, config, rng, table));
  }
  out.trace = detector_trace(out.intensities, config, rng);
  return out;
}

}  // namespace qkd
