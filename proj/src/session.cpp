#include "qkd/session.hpp"

#include <deque>
#include <utility>

#include "qkd/error.hpp"

namespace qkd {

void SessionConfig::validate() const {
  if (n_bits == 0) throw Error(Errc::InvalidConfig, "n_bits must be >= 1");
  if (n_bits > 0xFFFFFFFFu) throw Error(Errc::InvalidConfig, "n_bits must fit in 32 bits");
  if (!(abort_mismatch_threshold >= 0.0 && abort_mismatch_threshold <= 1.0)) {
    throw Error(Errc::InvalidConfig, "abort_mismatch_threshold must lie in [0, 1]");
  }
}

std::vector<Trit> Transcript::trits() const {
  std::vector<Trit> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.trit);
  return out;
}

BitString Transcript::bob_measured() const {
  BitString out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.bob_bit);
  return out;
}

double SessionOutcome::sifted_qber() const {
  const auto& a = transcript.alice_sifted;
  const auto& b = transcript.bob_sifted;
  if (a.empty()) return 0.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i] ? 1 : 0;
  return static_cast<double>(diff) / static_cast<double>(a.size());
}

channel::BobMeasurement resolve_measurement(std::vector<Trit> trits, RandomSource& rng,
                                            const std::optional<BitString>& fill) {
  if (fill && fill->size() != trits.size()) throw Error(Errc::LengthMismatch, "uncertain fill length differs from slots");
  channel::BobMeasurement m;
  m.bits.reserve(trits.size());
  for (std::size_t i = 0; i < trits.size(); ++i) {
    switch (trits[i]) {
      case Trit::Zero: m.bits.push_back(Bit::Zero); break;
      case Trit::One: m.bits.push_back(Bit::One); break;
      case Trit::Uncertain: m.bits.push_back(fill ? (*fill)[i] : bit_from(rng.coin())); break;
    }
  }
  m.trits = std::move(trits);
  return m;
}

namespace {

SessionOutcome run_with(const AliceRecord& alice, const std::vector<Basis>& bob_bases, RandomSource& bob_rng,
                        const std::optional<BitString>& fill, const SessionConfig& config,
                        const PipelineConfig& pipeline, const std::optional<EveConfig>& eve_config,
                        DecoderConfig decoder) {
  config.validate();
  pipeline.validate();
  const std::size_t n = alice.bits.size();
  if (alice.bases.size() != n || bob_bases.size() != n) throw Error(Errc::LengthMismatch, "session records differ in length");

  // Phases 1-2: quantum transmission and Bob's readout.
  RandomSource optics_rng(pipeline.seed);
  std::optional<Eavesdropper> eve;
  if (eve_config) eve.emplace(*eve_config);
  Transmission tx = simulate_transmission(alice.bits, alice.bases, bob_bases, eve ? &*eve : nullptr, pipeline, optics_rng);

  decoder.expected_slots = n;
  const auto stats = segment(to_trace_file(tx.trace), decoder);
  std::vector<Trit> trits;
  trits.reserve(n);
  for (const auto& st : stats) trits.push_back(classify(st, decoder));
  channel::BobMeasurement measured = resolve_measurement(trits, bob_rng, fill);

  SessionOutcome out;
  out.transcript.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    SlotRow& r = out.transcript.rows[i];
    r.index = i;
    r.alice_bit = alice.bits[i];
    r.alice_basis = alice.bases[i];
    r.state = encode_state(alice.bits[i], alice.bases[i]);
    r.bob_basis = bob_bases[i];
    r.intensity = tx.intensities[i];
    r.mean_ch1_v = stats[i].mean_ch1_v;
    r.mean_ch2_v = stats[i].mean_ch2_v;
    r.trit = measured.trits[i];
    r.bob_bit = measured.bits[i];
    if (eve) r.eve = eve->transcript()[i];
  }
  out.trace = std::move(tx.trace);
  // Phase 3: public comparison, framed exactly as on a real channel.
  apply_exchange(out, exchange_in_process(alice, bob_bases, measured, config));
  return out;
}

}  // namespace

ChannelExchange exchange_in_process(const AliceRecord& alice, const std::vector<Basis>& bob_bases,
                                    const channel::BobMeasurement& measured, const SessionConfig& config) {
  channel::AliceParty alice_party(alice, config.sample_len);
  channel::BobParty bob_party(bob_bases, measured, config.abort_mismatch_threshold);

  ChannelExchange ex;
  std::deque<std::pair<bool, wire::Message>> queue;  // (from_alice, message)
  for (auto& m : alice_party.start()) queue.emplace_back(true, std::move(m));
  while (!queue.empty()) {
    auto [from_alice, msg] = std::move(queue.front());
    queue.pop_front();
    auto bytes = wire::encode_message(msg);
    auto decoded = std::get<wire::Decoded>(wire::decode_message(bytes));
    ex.frames.push_back({from_alice ? "alice" : "bob", wire::type_of(decoded.message), std::move(bytes)});
    channel::Party& receiver = from_alice ? static_cast<channel::Party&>(bob_party) : alice_party;
    if (receiver.done()) continue;
    for (auto& reply : receiver.on_message(decoded.message)) queue.emplace_back(!from_alice, std::move(reply));
  }
  ex.alice = alice_party.outcome();
  ex.bob = bob_party.outcome();
  ex.alice_failure = alice_party.failure();
  ex.bob_failure = bob_party.failure();
  ex.alice_sifted = alice_party.sifted_key();
  ex.bob_sifted = bob_party.sifted_key();
  ex.sample_mismatches = bob_party.sample_mismatches();
  ex.uncertain_kept = bob_party.uncertain_kept();
  return ex;
}

void apply_exchange(SessionOutcome& out, ChannelExchange ex) {
  auto& t = out.transcript;
  t.channel = std::move(ex.frames);
  if (ex.alice_failure) throw *ex.alice_failure;
  if (ex.bob_failure) throw *ex.bob_failure;
  if (!ex.alice || !ex.bob) throw Error(Errc::ProtocolViolation, "public channel stalled");

  const auto& a = *ex.alice;
  const auto& b = *ex.bob;
  t.matching_indices = a.matching_indices;
  t.alice_sifted = std::move(ex.alice_sifted);
  t.bob_sifted = std::move(ex.bob_sifted);
  t.sample_len = a.sample_len;
  t.sample_mismatches = ex.sample_mismatches;
  t.uncertain_kept = ex.uncertain_kept;
  t.alice_final = a.final_key;
  t.bob_final = b.final_key;

  out.verdict = a.verdict;
  out.final_key = a.final_key;
  out.abort_reason = b.abort_reason;
  out.sample_mismatch_rate =
      t.sample_len == 0 ? 0.0 : static_cast<double>(t.sample_mismatches) / static_cast<double>(t.sample_len);

  for (SlotRow& r : t.rows) {
    r.kept = false;
    r.in_sample = false;
    r.key_bit.reset();
  }
  for (std::size_t j = 0; j < t.matching_indices.size(); ++j) {
    if (t.matching_indices[j] >= t.rows.size()) continue;
    SlotRow& r = t.rows[t.matching_indices[j]];
    r.kept = true;
    r.in_sample = j < t.sample_len;
    if (!r.in_sample && out.verdict == Verdict::KeyEstablished) r.key_bit = r.alice_bit;
  }
}

SessionOutcome run_session(const SessionConfig& config, const PipelineConfig& pipeline,
                           const std::optional<EveConfig>& eve, const DecoderConfig& decoder) {
  config.validate();
  RandomSource alice_rng(config.seed_alice);
  RandomSource bob_rng(config.seed_bob);
  AliceRecord alice;
  std::tie(alice.bits, alice.bases) = generate_random(config.n_bits, alice_rng);
  const auto bob_bases = random_bases(config.n_bits, bob_rng);
  return run_with(alice, bob_bases, bob_rng, std::nullopt, config, pipeline, eve, decoder);
}

SessionOutcome run_prepared_session(const PreparedSession& prepared, const SessionConfig& config,
                                    const PipelineConfig& pipeline, const std::optional<EveConfig>& eve,
                                    const DecoderConfig& decoder) {
  SessionConfig effective = config;
  effective.n_bits = prepared.alice.bits.size();
  RandomSource bob_rng(config.seed_bob);
  return run_with(prepared.alice, prepared.bob_bases, bob_rng, prepared.uncertain_fill, effective, pipeline, eve, decoder);
}

channel::QuantumSimulator make_simulator(AliceRecord alice, PipelineConfig pipeline, std::optional<EveConfig> eve) {
  pipeline.validate();
  if (eve) eve->validate();
  return [alice = std::move(alice), pipeline, eve](const std::vector<Basis>& bob_bases) {
    RandomSource optics_rng(pipeline.seed);
    std::optional<Eavesdropper> tap;
    if (eve) tap.emplace(*eve);
    const Transmission tx =
        simulate_transmission(alice.bits, alice.bases, bob_bases, tap ? &*tap : nullptr, pipeline, optics_rng);
    return wire::SimTrace{tx.trace.sample_period_ns, tx.trace.ch1_volts, tx.trace.ch2_volts};
  };
}

channel::TraceDecoder make_trace_decoder(DecoderConfig decoder, std::size_t n_bits, RandomSource bob_rng) {
  decoder.expected_slots = n_bits;
  decoder.validate();
  return [decoder, bob_rng](const wire::SimTrace& sim) mutable {
    if (sim.ch1_volts.size() != sim.ch2_volts.size()) throw Error(Errc::LengthMismatch, "trace channels differ in length");
    const Trace trace{sim.sample_period_ns, sim.ch1_volts, sim.ch2_volts};
    return resolve_measurement(decode_trace(to_trace_file(trace), decoder), bob_rng);
  };
}

}  // namespace qkd
