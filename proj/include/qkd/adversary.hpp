#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "qkd/optics.hpp"
#include "qkd/polarization.hpp"
#include "qkd/random.hpp"

namespace qkd {

enum class EveMode { Beam, Photon };

struct EveConfig {
  double tap_fraction = 1.0;
  std::uint64_t seed_eve = 0;
  EveMode mode = EveMode::Beam;
  int photon_count = 1;  // photon mode only

  void validate() const;
};

struct EveRecord {
  std::size_t slot = 0;
  bool tapped = false;
  std::optional<Basis> basis;
  std::optional<Bit> guessed_bit;
};

// Intercept-resend attacker sitting between the two rotators. Owns its
// random source and its own transcript; one instance per session.
class Eavesdropper {
 public:
  explicit Eavesdropper(EveConfig config, EncodingTable table = {});

  // With probability tap_fraction measures the beam in a random basis and
  // re-emits the collapsed eigenstate at full intensity.
  Beam intercept(const Beam& beam, std::size_t slot);

  // Forces Eve's basis for the next intercepted slots (test hook).
  void force_basis(std::optional<Basis> basis) { forced_basis_ = basis; }

  void set_tap_fraction(double tap);
  const EveConfig& config() const noexcept { return config_; }
  const std::vector<EveRecord>& transcript() const noexcept { return transcript_; }

 private:
  EveConfig config_;
  EncodingTable table_;
  RandomSource rng_;
  std::optional<Basis> forced_basis_;
  std::vector<EveRecord> transcript_;
};

// Expected sifted-key error rate under intercept-resend at the given tap fraction.
double expected_qber(double tap_fraction);

// Probability that a zero-threshold comparison of sample_len sifted bits
// catches at least one error.
double detection_probability(double tap_fraction, std::size_t sample_len);

}  // namespace qkd
