#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "qkd/adversary.hpp"
#include "qkd/session.hpp"

namespace qkd::report {

nlohmann::json to_json(const SessionConfig& config);
nlohmann::json to_json(const PipelineConfig& config);
nlohmann::json to_json(const DecoderConfig& config);
nlohmann::json to_json(const EveConfig& config);
nlohmann::json to_json(const EveRecord& record);
nlohmann::json to_json(const channel::EndpointOutcome& outcome);

// One record per slot and phase with the fixed field names phase, index,
// alice_bit, alice_basis, state, bob_basis, trit, kept, key_bit.
nlohmann::json transcript_records(const Transcript& transcript);

// The per-slot row of a run report; the demo service renders its tables
// from the same function.
nlohmann::json slot_row(const SlotRow& row);

// Run report: config echo (seeds included), outcome, per-slot table and the
// public-channel frames. Contains no wall-clock data, so re-running with
// the echoed seeds reproduces it byte for byte.
nlohmann::json run_report(const SessionOutcome& outcome, const SessionConfig& config, const PipelineConfig& pipeline,
                          const std::optional<EveConfig>& eve, const DecoderConfig& decoder);

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace qkd::report
