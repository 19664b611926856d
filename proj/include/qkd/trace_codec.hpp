#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qkd/optics.hpp"
#include "qkd/polarization.hpp"

namespace qkd {

struct TraceRow {
  double time_s = 0.0;
  double ch1_v = 0.0;
  double ch2_v = 0.0;
};

struct TraceFile {
  double sample_period_ns = 0.0;
  std::vector<TraceRow> rows;
};

struct SlotStats {
  std::size_t index = 0;
  double mean_ch1_v = 0.0;
  double mean_ch2_v = 0.0;
  double contrast = 0.0;
  std::size_t samples = 0;
};

struct DecoderConfig {
  double slot_period_ns = 100.0;
  // Laser pulse width the capture was taken with; the averaging window is
  // the central pulse_window_fraction of it.
  double pulse_width_ns = 20.0;
  double pulse_window_fraction = 0.8;
  double certain_threshold = 0.6;
  double no_signal_floor_volts = 0.05;
  std::optional<std::size_t> expected_slots;
  // Must match the wiring the capture was taken with (ch1 carries 0 bits).
  bool swap_channels = false;

  void validate() const;
};

// Decoder settings matching a simulated pipeline.
DecoderConfig decoder_for(const PipelineConfig& pipeline);

inline constexpr std::string_view kTraceCsvHeader = "time_s,ch1_v,ch2_v";

// Throws MalformedHeader, NonMonotonicTime, NonUniformSpacing or
// RowParseError (with the 1-based line number in Error::where()).
TraceFile parse_trace_csv(std::string_view text);

// Voltages carry 9 significant digits.
std::string write_trace_csv(const Trace& trace);
TraceFile to_trace_file(const Trace& trace);

std::vector<SlotStats> segment(const TraceFile& trace, const DecoderConfig& config);
Trit classify(const SlotStats& stats, const DecoderConfig& config);
std::vector<Trit> decode_trace(const TraceFile& trace, const DecoderConfig& config);

}  // namespace qkd
