#include "pbcast/murmur.hpp"

#include <algorithm>

namespace pbcast {

MurmurState murmur_init(ProcessId self, ProcessId sender, std::uint32_t n, double g, Rng& rng, Outbox& out) {
    MurmurState s;
    s.self = self;
    s.sender = sender;
    s.gossip_sample = sample_poisson_distinct(n, g, rng);
    for (ProcessId p : s.gossip_sample) post(out, self, p, {RecordKind::gossip_subscribe, {}});
    return s;
}

void murmur_on_subscribe(MurmurState& s, ProcessId from, Outbox& out) {
    if (s.delivered) post(out, s.self, from, {RecordKind::gossip, *s.delivered});
    auto it = std::lower_bound(s.gossip_sample.begin(), s.gossip_sample.end(), from);
    if (it == s.gossip_sample.end() || *it != from) s.gossip_sample.insert(it, from);
}

static std::optional<SignedPayload> dispatch(MurmurState& s, const SignedPayload& p, Outbox& out) {
    if (s.delivered) return std::nullopt;
    s.delivered = p;
    for (ProcessId q : s.gossip_sample) post(out, s.self, q, {RecordKind::gossip, p});
    return p;
}

std::optional<SignedPayload> murmur_broadcast(MurmurState& s, const SignedPayload& signed_message, Outbox& out) {
    return dispatch(s, signed_message, out);
}

std::optional<SignedPayload> murmur_on_gossip(MurmurState& s, const Authority& auth, const SignedPayload& payload,
                                              Outbox& out) {
    if (!auth.verify(s.sender, payload)) return std::nullopt;
    return dispatch(s, payload, out);
}

}  // namespace pbcast
