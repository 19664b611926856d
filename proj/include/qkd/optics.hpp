#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qkd/polarization.hpp"
#include "qkd/random.hpp"

namespace qkd {

class Eavesdropper;

// Many-photon pulse: relative power plus linear polarization.
struct Beam {
  double intensity = 1.0;
  PolarizationAngle angle;
  bool polarized = true;
  // Set when a polarizer was handed an already-polarized off-axis beam.
  bool warning = false;
};

struct PipelineConfig {
  double pulse_width_ns = 20.0;
  double slot_period_ns = 100.0;
  int samples_per_slot = 64;
  double full_scale_volts = 1.0;
  double noise_sigma_volts = 0.02;
  double drift_offset_deg = 0.0;
  // Physical wiring swapped: the 0-bit port feeds ch1.
  bool swap_channels = false;
  // 0 renders the beam as intensities; >0 samples that many photons per
  // pulse at the beamsplitter.
  int photons_per_pulse = 0;
  std::uint64_t seed = 0;

  // Throws InvalidConfig. The laser's pulse width is adjustable over 6-39 ns.
  void validate() const;
  double sample_period_ns() const { return slot_period_ns / samples_per_slot; }
};

struct ChannelPair {
  double ch1 = 0.0;  // 1-bit port
  double ch2 = 0.0;  // 0-bit port
};

// Oscilloscope capture: two equal-length voltage channels.
struct Trace {
  double sample_period_ns = 0.0;
  std::vector<double> ch1_volts;
  std::vector<double> ch2_volts;
};

Beam laser_pulse(const PipelineConfig& config);
Beam inline_polarizer(const Beam& beam);
Beam alice_rotator(const Beam& beam, Bit bit, Basis basis, const EncodingTable& table = {});
// DAD rotates by -45 so the beamsplitter's fixed HV axes measure D/AD.
Beam bob_rotator(const Beam& beam, Basis basis);
ChannelPair pbs_split(const Beam& beam);

Trace detector_trace(std::span<const ChannelPair> slot_intensities, const PipelineConfig& config, RandomSource& rng);

struct Transmission {
  std::vector<ChannelPair> intensities;
  Trace trace;
};

// Per-slot chain laser -> polarizer -> Alice -> drift -> (Eve) -> Bob -> PBS,
// followed by the detectors over all slots. `eve` may be null.
Transmission simulate_transmission(std::span<const Bit> alice_bits, std::span<const Basis> alice_bases,
                                   std::span<const Basis> bob_bases, Eavesdropper* eve,
                                   const PipelineConfig& config, RandomSource& rng,
                                   const EncodingTable& table = {});

// One slot of the optical path without the detectors; used by the
// round-by-round service.
ChannelPair propagate_slot(std::size_t slot, Bit bit, Basis alice_basis, Basis bob_basis, Eavesdropper* eve,
                           const PipelineConfig& config, RandomSource& rng, const EncodingTable& table = {});

}  // namespace qkd
