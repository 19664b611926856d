#include "qkd/trace_codec.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "qkd/error.hpp"

namespace qkd {

void DecoderConfig::validate() const {
  auto fail = [](const char* msg) { throw Error(Errc::InvalidConfig, msg); };
  if (!std::isfinite(slot_period_ns) || slot_period_ns <= 0.0) fail("slot_period_ns must be positive");
  if (!std::isfinite(pulse_width_ns) || pulse_width_ns <= 0.0 || pulse_width_ns > slot_period_ns) {
    fail("pulse_width_ns must lie in (0, slot_period_ns]");
  }
  if (!(pulse_window_fraction > 0.0 && pulse_window_fraction <= 1.0)) fail("pulse_window_fraction must lie in (0, 1]");
  if (!(certain_threshold > 0.0 && certain_threshold < 1.0)) fail("certain_threshold must lie in (0, 1)");
  if (!std::isfinite(no_signal_floor_volts) || no_signal_floor_volts <= 0.0) fail("no_signal_floor_volts must be positive");
}

DecoderConfig decoder_for(const PipelineConfig& pipeline) {
  DecoderConfig config;
  config.slot_period_ns = pipeline.slot_period_ns;
  config.pulse_width_ns = pipeline.pulse_width_ns;
  config.no_signal_floor_volts = 0.05 * pipeline.full_scale_volts;
  config.swap_channels = pipeline.swap_channels;
  return config;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_real(std::string_view field, double& out) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) return false;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size() && std::isfinite(out);
}

}  // namespace

TraceFile parse_trace_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

  TraceFile file;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    const bool last = end == std::string_view::npos;
    if (last) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (!header_seen) {
      if (trim(line) != kTraceCsvHeader) throw Error(Errc::MalformedHeader, "expected header 'time_s,ch1_v,ch2_v'", line_no);
      header_seen = true;
      continue;
    }
    if (line.empty() && last) break;

    std::string_view fields[3];
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (count == 3) throw Error(Errc::RowParseError, "too many fields on line " + std::to_string(line_no), line_no);
      fields[count++] = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    TraceRow row;
    if (count != 3 || !parse_real(fields[0], row.time_s) || !parse_real(fields[1], row.ch1_v) ||
        !parse_real(fields[2], row.ch2_v)) {
      throw Error(Errc::RowParseError, "expected three numbers on line " + std::to_string(line_no), line_no);
    }

    if (!file.rows.empty()) {
      const double spacing_ns = (row.time_s - file.rows.back().time_s) * 1e9;
      if (!(spacing_ns > 0.0)) {
        throw Error(Errc::NonMonotonicTime, "time must strictly increase (line " + std::to_string(line_no) + ")", line_no);
      }
      if (file.rows.size() == 1) {
        file.sample_period_ns = spacing_ns;
      } else if (std::fabs(spacing_ns - file.sample_period_ns) > 1e-3 * file.sample_period_ns) {
        throw Error(Errc::NonUniformSpacing, "sample spacing jitter above 0.1% (line " + std::to_string(line_no) + ")",
                    line_no);
      }
    }
    file.rows.push_back(row);
  }
  if (!header_seen) throw Error(Errc::MalformedHeader, "empty input", 1);
  return file;
}

std::string write_trace_csv(const Trace& trace) {
  if (trace.ch1_volts.size() != trace.ch2_volts.size()) throw Error(Errc::LengthMismatch, "trace channels differ in length");
  std::string out(kTraceCsvHeader);
  out.push_back('\n');
  char buf[96];
  for (std::size_t i = 0; i < trace.ch1_volts.size(); ++i) {
    const double t = static_cast<double>(i) * trace.sample_period_ns * 1e-9;
    const int n = std::snprintf(buf, sizeof buf, "%.12g,%.9g,%.9g\n", t, trace.ch1_volts[i], trace.ch2_volts[i]);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

TraceFile to_trace_file(const Trace& trace) {
  if (trace.ch1_volts.size() != trace.ch2_volts.size()) throw Error(Errc::LengthMismatch, "trace channels differ in length");
  TraceFile file;
  file.sample_period_ns = trace.ch1_volts.size() > 1 ? trace.sample_period_ns : 0.0;
  file.rows.reserve(trace.ch1_volts.size());
  for (std::size_t i = 0; i < trace.ch1_volts.size(); ++i) {
    file.rows.push_back({static_cast<double>(i) * trace.sample_period_ns * 1e-9, trace.ch1_volts[i], trace.ch2_volts[i]});
  }
  return file;
}

std::vector<SlotStats> segment(const TraceFile& trace, const DecoderConfig& config) {
  config.validate();
  std::size_t slots = 0;
  if (!trace.rows.empty() && trace.sample_period_ns > 0.0) {
    const double duration_ns = static_cast<double>(trace.rows.size()) * trace.sample_period_ns;
    if (trace.sample_period_ns > config.slot_period_ns) {
      throw Error(Errc::InvalidArgument, "sample period exceeds the slot period");
    }
    slots = static_cast<std::size_t>(std::floor(duration_ns / config.slot_period_ns + 1e-9));
  }
  if (config.expected_slots && *config.expected_slots != slots) {
    throw Error(Errc::SlotCountMismatch,
                "expected " + std::to_string(*config.expected_slots) + " slots, trace holds " + std::to_string(slots));
  }

  const double trim_ns = 0.5 * (1.0 - config.pulse_window_fraction) * config.pulse_width_ns;
  const double window_lo = trim_ns;
  const double window_hi = config.pulse_width_ns - trim_ns;
  // absorbs the rounding of printed timestamps at window edges
  const double eps = 1e-6 * trace.sample_period_ns;

  std::vector<SlotStats> stats(slots);
  for (std::size_t s = 0; s < slots; ++s) stats[s].index = s;
  if (slots == 0) return stats;

  const double t0 = trace.rows.front().time_s;
  for (const TraceRow& row : trace.rows) {
    const double t_ns = (row.time_s - t0) * 1e9;
    const auto slot = static_cast<std::size_t>(std::floor((t_ns + eps) / config.slot_period_ns));
    if (slot >= slots) break;
    const double offset = t_ns - static_cast<double>(slot) * config.slot_period_ns;
    if (offset + eps < window_lo || offset + eps >= window_hi) continue;
    SlotStats& st = stats[slot];
    st.mean_ch1_v += row.ch1_v;
    st.mean_ch2_v += row.ch2_v;
    ++st.samples;
  }

  for (SlotStats& st : stats) {
    if (st.samples > 0) {
      st.mean_ch1_v /= static_cast<double>(st.samples);
      st.mean_ch2_v /= static_cast<double>(st.samples);
    }
    if (config.swap_channels) std::swap(st.mean_ch1_v, st.mean_ch2_v);
    const double total = std::max(st.mean_ch1_v + st.mean_ch2_v, config.no_signal_floor_volts);
    st.contrast = std::clamp((st.mean_ch1_v - st.mean_ch2_v) / total, -1.0, 1.0);
  }
  return stats;
}

Trit classify(const SlotStats& stats, const DecoderConfig& config) {
  if (!std::isfinite(stats.mean_ch1_v) || !std::isfinite(stats.mean_ch2_v) || !std::isfinite(stats.contrast)) {
    throw Error(Errc::InvalidArgument, "slot statistics must be finite", stats.index);
  }
  if (stats.mean_ch1_v + stats.mean_ch2_v < config.no_signal_floor_volts) {
    throw Error(Errc::NoSignal, "both channels below the signal floor at slot " + std::to_string(stats.index), stats.index);
  }
  if (stats.contrast >= config.certain_threshold) return Trit::One;
  if (stats.contrast <= -config.certain_threshold) return Trit::Zero;
  return Trit::Uncertain;
}

std::vector<Trit> decode_trace(const TraceFile& trace, const DecoderConfig& config) {
  std::vector<Trit> out;
  const auto stats = segment(trace, config);
  out.reserve(stats.size());
  for (const SlotStats& st : stats) out.push_back(classify(st, config));
  return out;
}

}  // namespace qkd
