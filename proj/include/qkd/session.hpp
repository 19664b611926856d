#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qkd/adversary.hpp"
#include "qkd/bb84.hpp"
#include "qkd/optics.hpp"
#include "qkd/protocol.hpp"
#include "qkd/trace_codec.hpp"
#include "qkd/transport.hpp"

namespace qkd {

struct SessionConfig {
  std::size_t n_bits = 1024;
  std::size_t sample_len = 100;
  double abort_mismatch_threshold = 0.0;
  std::uint64_t seed_alice = 1;
  std::uint64_t seed_bob = 2;

  void validate() const;
};

// One row per transmitted slot; enough to rebuild every sending, receiving
// and comparing table.
struct SlotRow {
  std::size_t index = 0;
  Bit alice_bit = Bit::Zero;
  Basis alice_basis = Basis::HV;
  PolarizationAngle state;
  Basis bob_basis = Basis::HV;
  ChannelPair intensity;
  double mean_ch1_v = 0.0;
  double mean_ch2_v = 0.0;
  Trit trit = Trit::Uncertain;
  Bit bob_bit = Bit::Zero;
  bool kept = false;
  bool in_sample = false;
  std::optional<Bit> key_bit;  // Alice's bit when it reached the final key
  std::optional<EveRecord> eve;
};

struct ChannelFrame {
  std::string from;  // "alice" or "bob"
  wire::MsgType type;
  std::vector<std::uint8_t> bytes;
};

struct Transcript {
  std::vector<SlotRow> rows;
  std::vector<std::uint32_t> matching_indices;
  BitString alice_sifted;
  BitString bob_sifted;
  std::size_t sample_len = 0;
  std::size_t sample_mismatches = 0;
  std::size_t uncertain_kept = 0;
  BitString alice_final;
  BitString bob_final;
  std::vector<ChannelFrame> channel;

  std::vector<Trit> trits() const;
  BitString bob_measured() const;
};

struct SessionOutcome {
  Verdict verdict = Verdict::Aborted;
  BitString final_key;  // empty when aborted
  double sample_mismatch_rate = 0.0;
  std::uint32_t abort_reason = 0;
  Transcript transcript;
  Trace trace;

  // Mismatch rate over the whole sifted key (not just the sample).
  double sifted_qber() const;
};

// Result of running both public-channel parties against each other in
// process, every frame round-tripped through the codec.
struct ChannelExchange {
  std::optional<channel::EndpointOutcome> alice;
  std::optional<channel::EndpointOutcome> bob;
  std::optional<Error> alice_failure;
  std::optional<Error> bob_failure;
  BitString alice_sifted;
  BitString bob_sifted;
  std::size_t sample_mismatches = 0;
  std::size_t uncertain_kept = 0;
  std::vector<ChannelFrame> frames;
};
ChannelExchange exchange_in_process(const AliceRecord& alice, const std::vector<Basis>& bob_bases,
                                    const channel::BobMeasurement& measured, const SessionConfig& config);

// Fills the comparing-phase columns of `rows` and the key/sift fields of
// `out` from a completed exchange. Rethrows a party failure, Alice's first.
void apply_exchange(SessionOutcome& out, ChannelExchange exchange);

// Pre-chosen bits and bases, e.g. a published test vector. `uncertain_fill`
// supplies Bob's reading for slots that decode as Uncertain instead of a
// coin flip.
struct PreparedSession {
  AliceRecord alice;
  std::vector<Basis> bob_bases;
  std::optional<BitString> uncertain_fill;
};

// generate -> transmit -> decode -> public-channel sift and sample check.
// Throws UnsiftableSession when the sifted key does not exceed the sample.
SessionOutcome run_session(const SessionConfig& config, const PipelineConfig& pipeline,
                           const std::optional<EveConfig>& eve, const DecoderConfig& decoder);

SessionOutcome run_prepared_session(const PreparedSession& prepared, const SessionConfig& config,
                                    const PipelineConfig& pipeline, const std::optional<EveConfig>& eve,
                                    const DecoderConfig& decoder);

// Bob's view of a decoded capture: trits plus bits with Uncertain resolved
// by `rng` (or by `fill` when given).
channel::BobMeasurement resolve_measurement(std::vector<Trit> trits, RandomSource& rng,
                                            const std::optional<BitString>& fill = std::nullopt);

// Simulation extension for two-process runs: Alice's side renders the optical
// path for Bob's announced bases, Bob's side decodes the returned capture.
// With the same seeds and configs the pair reproduces run_session exactly.
channel::QuantumSimulator make_simulator(AliceRecord alice, PipelineConfig pipeline, std::optional<EveConfig> eve);
channel::TraceDecoder make_trace_decoder(DecoderConfig decoder, std::size_t n_bits, RandomSource bob_rng);

}  // namespace qkd
