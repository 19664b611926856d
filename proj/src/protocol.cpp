#include "qkd/protocol.hpp"

#include <cmath>
#include <string>

namespace qkd::channel {

namespace {
std::string unexpected(const wire::Message& msg, const char* state) {
  return std::string("unexpected ") + std::string(wire::to_string(wire::type_of(msg))) + " while " + state;
}

std::uint32_t to_milli(double rate) { return static_cast<std::uint32_t>(std::lround(rate * 1000.0)); }
}  // namespace

std::vector<wire::Message> Party::fail(Errc code, const std::string& what) {
  failure_.emplace(code, what);
  return {wire::Abort{static_cast<std::uint32_t>(wire::AbortReason::ProtocolViolation)}};
}

std::vector<wire::Message> Party::handle_peer_abort(const wire::Abort& abort, bool verdict_pending) {
  const auto reason = static_cast<wire::AbortReason>(abort.reason_code);
  if (reason == wire::AbortReason::ProtocolViolation && !verdict_pending) {
    failure_.emplace(Errc::ProtocolViolation, "peer aborted the session (protocol violation)");
    return {};
  }
  EndpointOutcome out = partial_;
  out.verdict = Verdict::Aborted;
  out.final_key.clear();
  out.abort_reason = abort.reason_code;
  outcome_ = std::move(out);
  return {};
}

AliceParty::AliceParty(AliceRecord record, std::size_t sample_len, std::uint32_t protocol_version,
                       QuantumSimulator simulate)
    : record_(std::move(record)), sample_len_(sample_len), version_(protocol_version), simulate_(std::move(simulate)) {
  if (record_.bits.size() != record_.bases.size()) throw Error(Errc::LengthMismatch, "Alice's bits and bases differ in length");
}

std::vector<wire::Message> AliceParty::start() {
  if (state_ != State::Idle) throw Error(Errc::ProtocolViolation, "session already started");
  state_ = State::AwaitHello;
  return {wire::Hello{version_, static_cast<std::uint32_t>(record_.bits.size())}};
}

std::vector<wire::Message> AliceParty::on_message(const wire::Message& msg) {
  if (done()) return {};
  const auto n = record_.bits.size();

  if (const auto* abort = std::get_if<wire::Abort>(&msg)) {
    const bool verdict_pending = state_ == State::AwaitAbortReason;
    state_ = State::Done;
    return handle_peer_abort(*abort, verdict_pending);
  }

  switch (state_) {
    case State::AwaitHello: {
      const auto* hello = std::get_if<wire::Hello>(&msg);
      if (hello == nullptr) return fail(Errc::ProtocolViolation, unexpected(msg, "awaiting Hello"));
      if (hello->protocol_version != version_) {
        failure_.emplace(Errc::VersionMismatch, "peer speaks protocol version " + std::to_string(hello->protocol_version) +
                                                    ", expected " + std::to_string(version_));
        return {wire::Abort{static_cast<std::uint32_t>(wire::AbortReason::ProtocolViolation)}};
      }
      if (hello->n_bits != n) return fail(Errc::ProtocolViolation, "peer configured for a different n_bits");
      state_ = simulate_ ? State::AwaitSimBases : State::AwaitBases;
      return {};
    }
    case State::AwaitSimBases: {
      const auto* sim = std::get_if<wire::SimBobBases>(&msg);
      if (sim == nullptr) return fail(Errc::ProtocolViolation, unexpected(msg, "awaiting SimBobBases"));
      if (sim->bases.size() != n) return fail(Errc::ProtocolViolation, "SimBobBases length differs from n_bits");
      state_ = State::AwaitBases;
      return {simulate_(sim->bases)};
    }
    case State::AwaitBases: {
      const auto* ann = std::get_if<wire::BasisAnnounce>(&msg);
      if (ann == nullptr) return fail(Errc::ProtocolViolation, unexpected(msg, "awaiting BasisAnnounce"));
      if (ann->bases.size() != n) {
        return fail(Errc::ProtocolViolation, "announced " + std::to_string(ann->bases.size()) + " bases against n_bits " +
                                                 std::to_string(n));
      }
      auto indices = sift(record_.bases, ann->bases);
      sifted_ = extract_key(record_.bits, indices);
      partial_.matching_indices = indices;
      partial_.sample_len = sample_len_;
      if (sifted_.size() <= sample_len_) {
        state_ = State::Done;
        return fail(Errc::UnsiftableSession, "sifted key of " + std::to_string(sifted_.size()) +
                                                 " bits does not exceed the sample of " + std::to_string(sample_len_));
      }
      wire::SampleBits sample;
      sample.start = 0;
      sample.bits.assign(sifted_.begin(), sifted_.begin() + static_cast<std::ptrdiff_t>(sample_len_));
      state_ = State::AwaitVerdict;
      return {wire::MatchIndices{std::move(indices)}, std::move(sample)};
    }
    case State::AwaitVerdict: {
      const auto* verdict = std::get_if<wire::VerdictMsg>(&msg);
      if (verdict == nullptr) return fail(Errc::ProtocolViolation, unexpected(msg, "awaiting Verdict"));
      partial_.sample_mismatch_rate = verdict->mismatch_rate_milli / 1000.0;
      if (!verdict->pass) {
        state_ = State::AwaitAbortReason;
        return {};
      }
      EndpointOutcome out = partial_;
      out.verdict = Verdict::KeyEstablished;
      out.final_key.assign(sifted_.begin() + static_cast<std::ptrdiff_t>(sample_len_), sifted_.end());
      outcome_ = std::move(out);
      state_ = State::Done;
      return {};
    }
    case State::AwaitAbortReason:
      return fail(Errc::ProtocolViolation, unexpected(msg, "awaiting Abort after a failed Verdict"));
    case State::Idle:
    case State::Done:
      break;
  }
  return fail(Errc::ProtocolViolation, unexpected(msg, "idle"));
}

BobParty::BobParty(std::vector<Basis> bases, BobMeasurement measured, double threshold, std::uint32_t protocol_version)
    : bases_(std::move(bases)), measured_(std::move(measured)), threshold_(threshold), version_(protocol_version) {
  if (measured_->trits.size() != bases_.size() || measured_->bits.size() != bases_.size()) {
    throw Error(Errc::LengthMismatch, "Bob's bases and measurements differ in length");
  }
}

BobParty::BobParty(std::vector<Basis> bases, TraceDecoder decode, double threshold, std::uint32_t protocol_version)
    : bases_(std::move(bases)), decode_(std::move(decode)), threshold_(threshold), version_(protocol_version) {}

std::vector<wire::Message> BobParty::on_message(const wire::Message& msg) {
  if (done()) return {};
  const auto n = bases_.size();

  if (const auto* abort = std::get_if<wire::Abort>(&msg)) {
    state_ = State::Done;
    return handle_peer_abort(*abort, false);
  }

  switch (state_) {
    case State::AwaitHello: {
      const auto* hello = std::get_if<wire::Hello>(&msg);
      if (hello == nullptr) return fail(Errc::ProtocolViolation, unexpected(msg, "awaiting Hello"));
      // Our Hello goes out first so the peer can diagnose a version skew too.
      std::vector<wire::Message> out{wire::Hello{version_, static_cast<std::uint32_t>(n)}};
      if (hello->protocol_version != version_) {
        failure_.emplace(Errc::VersionMismatch, "peer speaks protocol version " + std::to_string(hello->protocol_version) +
                                                    ", expected " + std::to_string(version_));
        out.push_back(wire::Abort{static_cast<std::uint32_t>(wire::AbortReason::ProtocolViolation)});
        return out;
      }
      if (hello->n_bits != n) {
        auto abort = fail(Errc::ProtocolViolation, "peer configured for a different n_bits");
        out.insert(out.end(), abort.begin(), abort.end());
        return out;
      }
      if (!measured_) {
        state_ = State::AwaitSimTrace;
        out.push_back(wire::SimBobBases{bases_});
      } else {
        state_ = State::AwaitIndices;
        out.push_back(wire::BasisAnnounce{bases_});
      }
      return out;
    }
    case State::AwaitSimTrace: {
      const auto* trace = std::get_if<wire::SimTrace>(&msg);
      if (trace == nullptr) return fail(Errc::ProtocolViolation, unexpected(msg, "awaiting SimTrace"));
      try {
        measured_ = decode_(*trace);
      } catch (const Error& e) {
        return fail(Errc::ProtocolViolation, std::string("simulated trace did not decode: ") + e.what());
      }
      if (measured_->trits.size() != n || measured_->bits.size() != n) {
        return fail(Errc::ProtocolViolation, "simulated trace holds the wrong number of slots");
      }
      state_ = State::AwaitIndices;
      return {wire::BasisAnnounce{bases_}};
    }
    case State::AwaitIndices: {
      const auto* match = std::get_if<wire::MatchIndices>(&msg);
      if (match == nullptr) return fail(Errc::ProtocolViolation, unexpected(msg, "awaiting MatchIndices"));
      for (std::size_t i = 0; i < match->indices.size(); ++i) {
        if (match->indices[i] >= n || (i > 0 && match->indices[i] <= match->indices[i - 1])) {
          return fail(Errc::ProtocolViolation, "matching indices out of range or not increasing");
        }
      }
      partial_.matching_indices = match->indices;
      sifted_ = extract_key(measured_->bits, match->indices);
      sifted_uncertain_.clear();
      for (std::uint32_t idx : match->indices) sifted_uncertain_.push_back(measured_->trits[idx] == Trit::Uncertain);
      state_ = State::AwaitSample;
      return {};
    }
    case State::AwaitSample: {
      const auto* sample = std::get_if<wire::SampleBits>(&msg);
      if (sample == nullptr) return fail(Errc::ProtocolViolation, unexpected(msg, "awaiting SampleBits"));
      const std::size_t start = sample->start;
      const std::size_t len = sample->bits.size();
      if (start + len > sifted_.size() || len >= sifted_.size()) {
        return fail(Errc::ProtocolViolation, "sample range does not leave a key");
      }
      mismatches_ = 0;
      for (std::size_t i = 0; i < len; ++i) {
        if (sample->bits[i] != sifted_[start + i]) ++mismatches_;
      }
      uncertain_kept_ = 0;
      for (bool u : sifted_uncertain_) uncertain_kept_ += u ? 1 : 0;
      std::size_t uncertain_in_key = 0;
      for (std::size_t i = 0; i < sifted_uncertain_.size(); ++i) {
        if ((i < start || i >= start + len) && sifted_uncertain_[i]) ++uncertain_in_key;
      }
      const double rate = len == 0 ? 0.0 : static_cast<double>(mismatches_) / static_cast<double>(len);
      const bool pass = rate <= threshold_ && uncertain_in_key == 0;

      partial_.sample_len = len;
      partial_.sample_mismatch_rate = to_milli(rate) / 1000.0;
      std::vector<wire::Message> out{wire::VerdictMsg{pass, to_milli(rate)}};
      EndpointOutcome result = partial_;
      if (pass) {
        result.verdict = Verdict::KeyEstablished;
        for (std::size_t i = 0; i < sifted_.size(); ++i) {
          if (i < start || i >= start + len) result.final_key.push_back(sifted_[i]);
        }
      } else {
        // An uncertain slot inside the final key means the key cannot be trusted.
        const auto reason = rate > threshold_ ? wire::AbortReason::SampleMismatch : wire::AbortReason::ProtocolViolation;
        result.verdict = Verdict::Aborted;
        result.abort_reason = static_cast<std::uint32_t>(reason);
        out.push_back(wire::Abort{static_cast<std::uint32_t>(reason)});
      }
      outcome_ = std::move(result);
      state_ = State::Done;
      return out;
    }
    case State::Done:
      break;
  }
  return fail(Errc::ProtocolViolation, unexpected(msg, "finished"));
}

}  // namespace qkd::channel
