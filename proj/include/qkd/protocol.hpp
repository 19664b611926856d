#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qkd/bb84.hpp"
#include "qkd/error.hpp"
#include "qkd/wire.hpp"

// Public-channel state machines for the comparing phase. Each side consumes
// one decoded message at a time and returns the messages to send back; the
// transport-driving loops live in endpoint.hpp.
//
// Message order: Alice Hello -> Bob Hello, BasisAnnounce -> Alice
// MatchIndices, SampleBits -> Bob Verdict (+ Abort when failing). With the
// simulation extension Bob sends SimBobBases instead of BasisAnnounce after
// Hello, Alice answers with SimTrace, and Bob then announces his bases.
namespace qkd::channel {

struct EndpointOutcome {
  Verdict verdict = Verdict::Aborted;
  BitString final_key;
  // Wire value: thousandths, as carried by Verdict.
  double sample_mismatch_rate = 0.0;
  std::vector<std::uint32_t> matching_indices;
  std::size_t sample_len = 0;
  std::uint32_t abort_reason = 0;  // 0 when not aborted

  bool operator==(const EndpointOutcome&) const = default;
};

struct BobMeasurement {
  std::vector<Trit> trits;
  BitString bits;  // Uncertain trits already resolved to a random bit
};

using QuantumSimulator = std::function<wire::SimTrace(const std::vector<Basis>& bob_bases)>;
using TraceDecoder = std::function<BobMeasurement(const wire::SimTrace& trace)>;

class Party {
 public:
  virtual ~Party() = default;

  bool done() const noexcept { return outcome_.has_value() || failure_.has_value(); }
  const std::optional<EndpointOutcome>& outcome() const noexcept { return outcome_; }
  const std::optional<Error>& failure() const noexcept { return failure_; }

  virtual std::vector<wire::Message> on_message(const wire::Message& msg) = 0;

 protected:
  // Records the failure and tells the peer.
  std::vector<wire::Message> fail(Errc code, const std::string& what);
  std::vector<wire::Message> handle_peer_abort(const wire::Abort& abort, bool verdict_pending);

  std::optional<EndpointOutcome> outcome_;
  std::optional<Error> failure_;
  EndpointOutcome partial_;
};

class AliceParty : public Party {
 public:
  AliceParty(AliceRecord record, std::size_t sample_len, std::uint32_t protocol_version = wire::kProtocolVersion,
             QuantumSimulator simulate = {});

  std::vector<wire::Message> start();
  std::vector<wire::Message> on_message(const wire::Message& msg) override;

  const BitString& sifted_key() const noexcept { return sifted_; }

 private:
  enum class State { Idle, AwaitHello, AwaitSimBases, AwaitBases, AwaitVerdict, AwaitAbortReason, Done };

  AliceRecord record_;
  std::size_t sample_len_;
  std::uint32_t version_;
  QuantumSimulator simulate_;
  State state_ = State::Idle;
  BitString sifted_;
};

class BobParty : public Party {
 public:
  // Measurement known up front (in-process runs).
  BobParty(std::vector<Basis> bases, BobMeasurement measured, double threshold,
           std::uint32_t protocol_version = wire::kProtocolVersion);
  // Measurement obtained through the simulation extension.
  BobParty(std::vector<Basis> bases, TraceDecoder decode, double threshold,
           std::uint32_t protocol_version = wire::kProtocolVersion);

  std::vector<wire::Message> on_message(const wire::Message& msg) override;

  const BitString& sifted_key() const noexcept { return sifted_; }
  const std::optional<BobMeasurement>& measurement() const noexcept { return measured_; }
  std::size_t sample_mismatches() const noexcept { return mismatches_; }
  // Matched positions whose slot decoded as Uncertain.
  std::size_t uncertain_kept() const noexcept { return uncertain_kept_; }

 private:
  enum class State { AwaitHello, AwaitSimTrace, AwaitIndices, AwaitSample, Done };

  std::vector<Basis> bases_;
  std::optional<BobMeasurement> measured_;
  TraceDecoder decode_;
  double threshold_;
  std::uint32_t version_;
  State state_ = State::AwaitHello;
  BitString sifted_;
  std::vector<bool> sifted_uncertain_;
  std::size_t mismatches_ = 0;
  std::size_t uncertain_kept_ = 0;
};

}  // namespace qkd::channel
