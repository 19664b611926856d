#include "qkd/wire.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "qkd/error.hpp"

namespace qkd::wire {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  buf.push_back(static_cast<std::uint8_t>(v >> 24));
  buf.push_back(static_cast<std::uint8_t>(v >> 16));
  buf.push_back(static_cast<std::uint8_t>(v >> 8));
  buf.push_back(static_cast<std::uint8_t>(v));
}

void put_f64(std::vector<std::uint8_t>& buf, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int shift = 56; shift >= 0; shift -= 8) buf.push_back(static_cast<std::uint8_t>(bits >> shift));
}

template <class T, class ToBit>
void put_packed(std::vector<std::uint8_t>& buf, const std::vector<T>& items, ToBit to_bit) {
  put_u32(buf, static_cast<std::uint32_t>(items.size()));
  std::uint8_t acc = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (to_bit(items[i])) acc = static_cast<std::uint8_t>(acc | (0x80u >> (i % 8)));
    if (i % 8 == 7) {
      buf.push_back(acc);
      acc = 0;
    }
  }
  if (items.size() % 8 != 0) buf.push_back(acc);
}

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::MalformedPayload, what); }

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t remaining() const { return data_.size() - pos_; }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }

  std::uint32_t u32() {
    need(4);
    const std::uint32_t v = (std::uint32_t{data_[pos_]} << 24) | (std::uint32_t{data_[pos_ + 1]} << 16) |
                            (std::uint32_t{data_[pos_ + 2]} << 8) | std::uint32_t{data_[pos_ + 3]};
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits = (bits << 8) | data_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 8;
    const double v = std::bit_cast<double>(bits);
    if (!std::isfinite(v)) malformed("non-finite real");
    return v;
  }

  // Returns the packed flags; the count is validated against the bytes
  // present before anything is allocated.
  std::vector<bool> packed() {
    const std::uint32_t count = u32();
    const std::size_t nbytes = (static_cast<std::size_t>(count) + 7) / 8;
    need(nbytes);
    std::vector<bool> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = (data_[pos_ + i / 8] & (0x80u >> (i % 8))) != 0;
    if (count % 8 != 0) {
      const std::uint8_t pad_mask = static_cast<std::uint8_t>(0xFFu >> (count % 8));
      if ((data_[pos_ + nbytes - 1] & pad_mask) != 0) malformed("non-zero pad bits");
    }
    pos_ += nbytes;
    return out;
  }

  void finish() const {
    if (pos_ != data_.size()) malformed("trailing bytes in payload");
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) malformed("payload shorter than its declared contents");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::vector<Basis> to_bases(const std::vector<bool>& flags) {
  std::vector<Basis> out;
  out.reserve(flags.size());
  for (bool f : flags) out.push_back(f ? Basis::DAD : Basis::HV);
  return out;
}

std::vector<double> reals(Reader& r, std::uint32_t count) {
  if (r.remaining() / 8 < count) malformed("sample count exceeds payload");
  std::vector<double> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) out.push_back(r.f64());
  return out;
}

bool known_type(std::uint8_t t) {
  switch (static_cast<MsgType>(t)) {
    case MsgType::Hello:
    case MsgType::BasisAnnounce:
    case MsgType::MatchIndices:
    case MsgType::SampleBits:
    case MsgType::Verdict:
    case MsgType::Abort:
    case MsgType::SimBobBases:
    case MsgType::SimTrace:
      return true;
  }
  return false;
}

Message decode_payload(MsgType type, std::span<const std::uint8_t> payload) {
  Reader r(payload);
  Message msg;
  switch (type) {
    case MsgType::Hello: {
      Hello m;
      m.protocol_version = r.u32();
      m.n_bits = r.u32();
      msg = m;
      break;
    }
    case MsgType::BasisAnnounce:
      msg = BasisAnnounce{to_bases(r.packed())};
      break;
    case MsgType::MatchIndices: {
      const std::uint32_t count = r.u32();
      if (r.remaining() / 4 < count) malformed("index count exceeds payload");
      MatchIndices m;
      m.indices.reserve(count);
      for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t idx = r.u32();
        if (!m.indices.empty() && idx <= m.indices.back()) malformed("indices must strictly increase");
        m.indices.push_back(idx);
      }
      msg = std::move(m);
      break;
    }
    case MsgType::SampleBits: {
      SampleBits m;
      m.start = r.u32();
      for (bool f : r.packed()) m.bits.push_back(bit_from(f));
      msg = std::move(m);
      break;
    }
    case MsgType::Verdict: {
      VerdictMsg m;
      const std::uint8_t pass = r.u8();
      if (pass > 1) malformed("verdict flag must be 0 or 1");
      m.pass = pass == 1;
      m.mismatch_rate_milli = r.u32();
      if (m.mismatch_rate_milli > 1000) malformed("mismatch rate above 1000 per mille");
      msg = m;
      break;
    }
    case MsgType::Abort:
      msg = Abort{r.u32()};
      break;
    case MsgType::SimBobBases:
      msg = SimBobBases{to_bases(r.packed())};
      break;
    case MsgType::SimTrace: {
      SimTrace m;
      const std::uint32_t count = r.u32();
      m.sample_period_ns = r.f64();
      if (r.remaining() / 16 < count) malformed("sample count exceeds payload");
      m.ch1_volts = reals(r, count);
      m.ch2_volts = reals(r, count);
      msg = std::move(m);
      break;
    }
  }
  r.finish();
  return msg;
}

}  // namespace

MsgType type_of(const Message& msg) noexcept {
  return std::visit(overloaded{
                        [](const Hello&) { return MsgType::Hello; },
                        [](const BasisAnnounce&) { return MsgType::BasisAnnounce; },
                        [](const MatchIndices&) { return MsgType::MatchIndices; },
                        [](const SampleBits&) { return MsgType::SampleBits; },
                        [](const VerdictMsg&) { return MsgType::Verdict; },
                        [](const Abort&) { return MsgType::Abort; },
                        [](const SimBobBases&) { return MsgType::SimBobBases; },
                        [](const SimTrace&) { return MsgType::SimTrace; },
                    },
                    msg);
}

std::string_view to_string(MsgType type) noexcept {
  switch (type) {
    case MsgType::Hello: return "Hello";
    case MsgType::BasisAnnounce: return "BasisAnnounce";
    case MsgType::MatchIndices: return "MatchIndices";
    case MsgType::SampleBits: return "SampleBits";
    case MsgType::Verdict: return "Verdict";
    case MsgType::Abort: return "Abort";
    case MsgType::SimBobBases: return "SimBobBases";
    case MsgType::SimTrace: return "SimTrace";
  }
  return "Unknown";
}

std::vector<std::uint8_t> encode_message(const Message& msg) {
  std::vector<std::uint8_t> payload;
  const auto is_dad = [](Basis b) { return b == Basis::DAD; };
  std::visit(overloaded{
                 [&](const Hello& m) {
                   put_u32(payload, m.protocol_version);
                   put_u32(payload, m.n_bits);
                 },
                 [&](const BasisAnnounce& m) { put_packed(payload, m.bases, is_dad); },
                 [&](const MatchIndices& m) {
                   put_u32(payload, static_cast<std::uint32_t>(m.indices.size()));
                   for (std::size_t i = 0; i < m.indices.size(); ++i) {
                     if (i > 0 && m.indices[i] <= m.indices[i - 1]) malformed("indices must strictly increase");
                     put_u32(payload, m.indices[i]);
                   }
                 },
                 [&](const SampleBits& m) {
                   put_u32(payload, m.start);
                   put_packed(payload, m.bits, [](Bit b) { return b == Bit::One; });
                 },
                 [&](const VerdictMsg& m) {
                   if (m.mismatch_rate_milli > 1000) malformed("mismatch rate above 1000 per mille");
                   payload.push_back(m.pass ? 1 : 0);
                   put_u32(payload, m.mismatch_rate_milli);
                 },
                 [&](const Abort& m) { put_u32(payload, m.reason_code); },
                 [&](const SimBobBases& m) { put_packed(payload, m.bases, is_dad); },
                 [&](const SimTrace& m) {
                   if (m.ch1_volts.size() != m.ch2_volts.size()) malformed("trace channels differ in length");
                   put_u32(payload, static_cast<std::uint32_t>(m.ch1_volts.size()));
                   put_f64(payload, m.sample_period_ns);
                   for (double v : m.ch1_volts) put_f64(payload, v);
                   for (double v : m.ch2_volts) put_f64(payload, v);
                 },
             },
             msg);
  if (payload.size() > kMaxPayload) throw Error(Errc::PayloadTooLarge, "payload exceeds 16 MiB");

  std::vector<std::uint8_t> frame;
  frame.reserve(kHeaderSize + payload.size());
  frame.push_back(kMagic0);
  frame.push_back(kMagic1);
  frame.push_back(kFrameVersion);
  frame.push_back(static_cast<std::uint8_t>(type_of(msg)));
  put_u32(frame, static_cast<std::uint32_t>(payload.size()));
  frame.insert(frame.end(), payload.begin(), payload.end());
  return frame;
}

DecodeResult decode_message(std::span<const std::uint8_t> bytes) {
  // Header fields are checked as soon as they arrive so garbage is rejected
  // without waiting for a full header.
  if (!bytes.empty() && bytes[0] != kMagic0) throw Error(Errc::BadMagic, "bad first magic byte");
  if (bytes.size() > 1 && bytes[1] != kMagic1) throw Error(Errc::BadMagic, "bad second magic byte");
  if (bytes.size() > 2 && bytes[2] != kFrameVersion) {
    throw Error(Errc::UnsupportedVersion, "frame version " + std::to_string(bytes[2]));
  }
  if (bytes.size() > 3 && !known_type(bytes[3])) throw Error(Errc::UnknownType, "message type " + std::to_string(bytes[3]));
  if (bytes.size() < kHeaderSize) return NeedMoreData{kHeaderSize - bytes.size()};

  const std::uint32_t len = (std::uint32_t{bytes[4]} << 24) | (std::uint32_t{bytes[5]} << 16) |
                            (std::uint32_t{bytes[6]} << 8) | std::uint32_t{bytes[7]};
  if (len > kMaxPayload) throw Error(Errc::PayloadTooLarge, "declared payload of " + std::to_string(len) + " bytes");
  const std::size_t total = kHeaderSize + len;
  if (bytes.size() < total) return NeedMoreData{total - bytes.size()};

  Message msg = decode_payload(static_cast<MsgType>(bytes[3]), bytes.subspan(kHeaderSize, len));
  return Decoded{std::move(msg), total};
}

}  // namespace qkd::wire
