#pragma once

#include "qkd/protocol.hpp"
#include "qkd/transport.hpp"

namespace qkd::channel {

// Drive one side of the public channel to completion over `transport`.
// Failures (ProtocolViolation, VersionMismatch, TransportClosed, ...) close
// the transport and throw; no key is returned in that case.
EndpointOutcome alice_endpoint(AliceParty& alice, Transport& transport, MessageStream::Observer observer = {});
EndpointOutcome bob_endpoint(BobParty& bob, Transport& transport, MessageStream::Observer observer = {});

}  // namespace qkd::channel
