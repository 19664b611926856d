#include "qkd/endpoint.hpp"

namespace qkd::channel {

namespace {

EndpointOutcome drive(Party& party, std::vector<wire::Message> first, Transport& transport,
                      MessageStream::Observer observer) {
  MessageStream stream(transport, std::move(observer));
  try {
    std::vector<wire::Message> outgoing = std::move(first);
    while (true) {
      for (const auto& msg : outgoing) {
        try {
          stream.send(msg);
        } catch (const Error&) {
          // A peer that already hung up cannot hear our Abort; report our own failure instead.
          if (!party.failure()) throw;
        }
      }
      if (party.done()) break;
      wire::Message incoming;
      try {
        incoming = stream.receive();
      } catch (const Error& e) {
        if (e.code() == Errc::UnsupportedVersion) throw Error(Errc::VersionMismatch, e.what());
        throw;
      }
      outgoing = party.on_message(incoming);
    }
  } catch (...) {
    transport.close();
    throw;
  }
  transport.close();
  if (party.failure()) throw *party.failure();
  return *party.outcome();
}

}  // namespace

EndpointOutcome alice_endpoint(AliceParty& alice, Transport& transport, MessageStream::Observer observer) {
  return drive(alice, alice.start(), transport, std::move(observer));
}

EndpointOutcome bob_endpoint(BobParty& bob, Transport& transport, MessageStream::Observer observer) {
  return drive(bob, {}, transport, std::move(observer));
}

}  // namespace qkd::channel
