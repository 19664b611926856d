#include "qkd/report.hpp"

namespace qkd::report {

using nlohmann::json;

namespace {
json bit_or_null(const std::optional<Bit>& b) { return b ? json(static_cast<int>(*b)) : json(nullptr); }
}  // namespace

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

json to_json(const SessionConfig& c) {
  return {{"n_bits", c.n_bits},
          {"sample_len", c.sample_len},
          {"abort_mismatch_threshold", c.abort_mismatch_threshold},
          {"seed_alice", c.seed_alice},
          {"seed_bob", c.seed_bob}};
}

json to_json(const PipelineConfig& c) {
  return {{"pulse_width_ns", c.pulse_width_ns},
          {"slot_period_ns", c.slot_period_ns},
          {"samples_per_slot", c.samples_per_slot},
          {"full_scale_volts", c.full_scale_volts},
          {"noise_sigma_volts", c.noise_sigma_volts},
          {"drift_offset_deg", c.drift_offset_deg},
          {"swap_channels", c.swap_channels},
          {"photons_per_pulse", c.photons_per_pulse},
          {"seed", c.seed}};
}

json to_json(const DecoderConfig& c) {
  return {{"slot_period_ns", c.slot_period_ns},
          {"pulse_width_ns", c.pulse_width_ns},
          {"pulse_window_fraction", c.pulse_window_fraction},
          {"certain_threshold", c.certain_threshold},
          {"no_signal_floor_volts", c.no_signal_floor_volts},
          {"expected_slots", c.expected_slots ? json(*c.expected_slots) : json(nullptr)},
          {"swap_channels", c.swap_channels}};
}

json to_json(const EveConfig& c) {
  return {{"tap_fraction", c.tap_fraction},
          {"seed_eve", c.seed_eve},
          {"mode", c.mode == EveMode::Beam ? "beam" : "photon"},
          {"photon_count", c.photon_count}};
}

json to_json(const EveRecord& r) {
  return {{"slot", r.slot},
          {"tapped", r.tapped},
          {"basis", r.basis ? json(std::string(to_string(*r.basis))) : json(nullptr)},
          {"guessed_bit", bit_or_null(r.guessed_bit)}};
}

json to_json(const channel::EndpointOutcome& o) {
  return {{"verdict", std::string(to_string(o.verdict))},
          {"final_key", to_string(o.final_key)},
          {"sample_mismatch_rate", o.sample_mismatch_rate},
          {"matching_indices", o.matching_indices},
          {"sample_len", o.sample_len},
          {"abort_reason", o.abort_reason}};
}

json transcript_records(const Transcript& t) {
  json records = json::array();
  for (const SlotRow& r : t.rows) {
    records.push_back({{"phase", "sending"},
                       {"index", r.index},
                       {"alice_bit", static_cast<int>(r.alice_bit)},
                       {"alice_basis", to_string(r.alice_basis)},
                       {"state", state_name(r.state)}});
  }
  for (const SlotRow& r : t.rows) {
    records.push_back({{"phase", "receiving"},
                       {"index", r.index},
                       {"bob_basis", to_string(r.bob_basis)},
                       {"ch1_v", r.mean_ch1_v},
                       {"ch2_v", r.mean_ch2_v},
                       {"trit", std::string(1, to_char(r.trit))},
                       {"bob_bit", static_cast<int>(r.bob_bit)}});
  }
  for (const SlotRow& r : t.rows) {
    records.push_back({{"phase", "comparing"},
                       {"index", r.index},
                       {"alice_basis", to_string(r.alice_basis)},
                       {"bob_basis", to_string(r.bob_basis)},
                       {"kept", r.kept},
                       {"sample", r.in_sample},
                       {"key_bit", bit_or_null(r.key_bit)}});
  }
  return records;
}

json slot_row(const SlotRow& r) {
  json row = {{"index", r.index},
              {"alice_bit", static_cast<int>(r.alice_bit)},
              {"alice_basis", to_string(r.alice_basis)},
              {"state", state_name(r.state)},
              {"bob_basis", to_string(r.bob_basis)},
              {"ch1_intensity", r.intensity.ch1},
              {"ch2_intensity", r.intensity.ch2},
              {"ch1_v", r.mean_ch1_v},
              {"ch2_v", r.mean_ch2_v},
              {"trit", std::string(1, to_char(r.trit))},
              {"bob_bit", static_cast<int>(r.bob_bit)},
              {"kept", r.kept},
              {"sample", r.in_sample},
              {"key_bit", bit_or_null(r.key_bit)}};
  if (r.eve) row["eve"] = to_json(*r.eve);
  return row;
}

json run_report(const SessionOutcome& outcome, const SessionConfig& config, const PipelineConfig& pipeline,
                const std::optional<EveConfig>& eve, const DecoderConfig& decoder) {
  const Transcript& t = outcome.transcript;
  json slots = json::array();
  for (const SlotRow& r : t.rows) slots.push_back(slot_row(r));
  json channel = json::array();
  for (const ChannelFrame& f : t.channel) {
    channel.push_back({{"from", f.from}, {"type", std::string(wire::to_string(f.type))}, {"bytes", to_hex(f.bytes)}});
  }

  return {{"config",
           {{"session", to_json(config)},
            {"pipeline", to_json(pipeline)},
            {"decoder", to_json(decoder)},
            {"eve", eve ? to_json(*eve) : json(nullptr)}}},
          {"outcome",
           {{"verdict", std::string(to_string(outcome.verdict))},
            {"final_key", to_string(outcome.final_key)},
            {"sample_mismatch_rate", outcome.sample_mismatch_rate},
            {"abort_reason", outcome.abort_reason},
            {"sifted_qber", outcome.sifted_qber()}}},
          {"sift",
           {{"matching_indices", t.matching_indices},
            {"alice_sifted", to_string(t.alice_sifted)},
            {"bob_sifted", to_string(t.bob_sifted)},
            {"sample_len", t.sample_len},
            {"sample_mismatches", t.sample_mismatches},
            {"uncertain_kept", t.uncertain_kept},
            {"alice_final", to_string(t.alice_final)},
            {"bob_final", to_string(t.bob_final)}}},
          {"trits", to_string(t.trits())},
          {"bob_measured", to_string(t.bob_measured())},
          {"slots", std::move(slots)},
          {"channel", std::move(channel)}};
}

}  // namespace qkd::report
