#pragma once

#include "pbcast/wire.hpp"

#include <optional>

namespace pbcast {

struct MurmurState {
    ProcessId self = 0;
    ProcessId sender = 0;
    std::vector<ProcessId> gossip_sample;  // sorted, distinct
    std::optional<SignedPayload> delivered;
};

MurmurState murmur_init(ProcessId self, ProcessId sender, std::uint32_t n, double g, Rng& rng, Outbox& out);

void murmur_on_subscribe(MurmurState& s, ProcessId from, Outbox& out);

// Returns the payload delivered by this call (the sender delivers at once).
std::optional<SignedPayload> murmur_broadcast(MurmurState& s, const SignedPayload& signed_message, Outbox& out);

// Returns the payload if this call raised the pb-Deliver indication.
std::optional<SignedPayload> murmur_on_gossip(MurmurState& s, const Authority& auth, const SignedPayload& payload,
                                              Outbox& out);

}  // namespace pbcast
