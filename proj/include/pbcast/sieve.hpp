#pragma once

#include "pbcast/wire.hpp"

#include <optional>

namespace pbcast {

struct SieveState {
    ProcessId self = 0;
    ProcessId sender = 0;
    std::uint32_t e_hat = 0;
    std::optional<SignedPayload> echo;
    std::vector<ProcessId> echo_sample;                 // multiset, one entry per slot
    std::vector<std::optional<SignedPayload>> replies;  // parallel to echo_sample
    std::vector<ProcessId> echo_subscribers;
    bool delivered = false;
};

// One EchoSubscribe per distinct member of the sample.
SieveState sieve_init(ProcessId self, ProcessId sender, std::uint32_t n, std::uint32_t e, std::uint32_t e_hat, Rng& rng,
                      Outbox& out);

void sieve_on_subscribe(SieveState& s, ProcessId from, Outbox& out);

// Wraps the pb broadcast: the payload Sieve hands to Murmur is the sender's
// signed message itself.
inline SignedPayload sieve_broadcast(const Authority& auth, ProcessId sender, Message m) { return auth.sign(sender, m); }

// Returns false if the payload was dropped.
bool sieve_on_pb_deliver(SieveState& s, const Authority& auth, const SignedPayload& payload, Outbox& out);

// Returns true if the Echo filled at least one slot.
bool sieve_on_echo(SieveState& s, const Authority& auth, ProcessId from, const SignedPayload& payload);

std::optional<SignedPayload> sieve_try_deliver(SieveState& s);

}  // namespace pbcast
