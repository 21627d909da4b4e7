#include "pbcast/contagion.hpp"

#include <algorithm>

namespace pbcast {

static bool add_sorted(std::vector<SignedPayload>& v, const SignedPayload& p) {
    auto it = std::lower_bound(v.begin(), v.end(), p.message,
                               [](const SignedPayload& a, Message m) { return a.message < m; });
    if (it != v.end() && it->message == p.message) return false;
    v.insert(it, p);
    return true;
}

ContagionState contagion_init(ProcessId self, ProcessId sender, std::uint32_t n, const ProtocolParams& params, Rng& rng,
                              Outbox& out) {
    ContagionState s;
    s.self = self;
    s.sender = sender;
    s.r_hat = params.r_hat;
    s.d_hat = params.d_hat;
    s.ready_sample = sample_with_replacement(n, params.r, rng);
    s.delivery_sample = sample_with_replacement(n, params.d, rng);
    s.replies_ready.resize(params.r);
    s.replies_delivery.resize(params.d);
    std::vector<ProcessId> all = s.ready_sample;
    all.insert(all.end(), s.delivery_sample.begin(), s.delivery_sample.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    for (ProcessId p : all) post(out, self, p, {RecordKind::ready_subscribe, {}});
    return s;
}

void contagion_on_subscribe(ContagionState& s, ProcessId from, Outbox& out) {
    for (const auto& p : s.ready) post(out, s.self, from, {RecordKind::ready, p});
    if (std::find(s.ready_subscribers.begin(), s.ready_subscribers.end(), from) == s.ready_subscribers.end())
        s.ready_subscribers.push_back(from);
}

bool is_ready_for(const ContagionState& s, Message m) {
    return std::any_of(s.ready.begin(), s.ready.end(), [m](const SignedPayload& p) { return p.message == m; });
}

static void become_ready(ContagionState& s, const SignedPayload& p, Outbox& out) {
    if (!add_sorted(s.ready, p)) return;
    for (ProcessId q : s.ready_subscribers) post(out, s.self, q, {RecordKind::ready, p});
}

bool contagion_on_pcb_deliver(ContagionState& s, const Authority& auth, const SignedPayload& payload, Outbox& out) {
    if (!auth.verify(s.sender, payload) || is_ready_for(s, payload.message)) return false;
    add_sorted(s.seen, payload);
    become_ready(s, payload, out);
    return true;
}

static std::uint32_t support(const std::vector<std::vector<Message>>& table, Message m) {
    std::uint32_t c = 0;
    for (const auto& slot : table)
        if (std::find(slot.begin(), slot.end(), m) != slot.end()) ++c;
    return c;
}

std::optional<SignedPayload> contagion_step(ContagionState& s, Outbox& out) {
    for (const auto& p : s.seen)
        if (!is_ready_for(s, p.message) && support(s.replies_ready, p.message) >= s.r_hat) become_ready(s, p, out);
    if (s.delivered) return std::nullopt;
    // Lowest message id wins when several cross the threshold together.
    for (const auto& p : s.seen) {
        if (support(s.replies_delivery, p.message) >= s.d_hat) {
            s.delivered = p;
            return p;
        }
    }
    return std::nullopt;
}

static void tally(std::vector<ProcessId> const& sample, std::vector<std::vector<Message>>& table, ProcessId from,
                  Message m) {
    for (std::size_t k = 0; k < sample.size(); ++k) {
        if (sample[k] != from) continue;
        auto& slot = table[k];
        if (std::find(slot.begin(), slot.end(), m) == slot.end()) slot.push_back(m);
    }
}

std::optional<SignedPayload> contagion_on_ready(ContagionState& s, const Authority& auth, ProcessId from,
                                                const SignedPayload& payload, Outbox& out) {
    if (!auth.verify(s.sender, payload)) return std::nullopt;
    add_sorted(s.seen, payload);
    tally(s.ready_sample, s.replies_ready, from, payload.message);
    tally(s.delivery_sample, s.replies_delivery, from, payload.message);
    return contagion_step(s, out);
}

}  // namespace pbcast
