#pragma once

#include "pbcast/wire.hpp"

#include <optional>

namespace pbcast {

struct ContagionState {
    ProcessId self = 0;
    ProcessId sender = 0;
    std::uint32_t r_hat = 0, d_hat = 0;
    std::vector<SignedPayload> ready;  // sorted by message id
    std::vector<ProcessId> ready_sample;
    std::vector<ProcessId> delivery_sample;
    std::vector<ProcessId> ready_subscribers;
    // Per slot, the messages that slot's process has declared Ready for.
    std::vector<std::vector<Message>> replies_ready;
    std::vector<std::vector<Message>> replies_delivery;
    // Every validly signed message seen so far, sorted; the candidates the
    // threshold guards range over.
    std::vector<SignedPayload> seen;
    std::optional<SignedPayload> delivered;
};

// Subscribes once per distinct member of the union of both samples.
ContagionState contagion_init(ProcessId self, ProcessId sender, std::uint32_t n, const ProtocolParams& params, Rng& rng,
                              Outbox& out);

void contagion_on_subscribe(ContagionState& s, ProcessId from, Outbox& out);

bool is_ready_for(const ContagionState& s, Message m);

// Returns false if the payload was dropped or the process was already ready.
bool contagion_on_pcb_deliver(ContagionState& s, const Authority& auth, const SignedPayload& payload, Outbox& out);

// Tallies the Ready, then applies the ready and delivery guards until
// neither fires. Returns the payload delivered by this call, if any.
std::optional<SignedPayload> contagion_on_ready(ContagionState& s, const Authority& auth, ProcessId from,
                                                const SignedPayload& payload, Outbox& out);

// The guards alone; used after a pcb delivery and by contagion_on_ready.
std::optional<SignedPayload> contagion_step(ContagionState& s, Outbox& out);

}  // namespace pbcast
