#include "pbcast/sieve.hpp"

#include <algorithm>

namespace pbcast {

static std::vector<ProcessId> distinct(std::vector<ProcessId> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

SieveState sieve_init(ProcessId self, ProcessId sender, std::uint32_t n, std::uint32_t e, std::uint32_t e_hat, Rng& rng,
                      Outbox& out) {
    SieveState s;
    s.self = self;
    s.sender = sender;
    s.e_hat = e_hat;
    s.echo_sample = sample_with_replacement(n, e, rng);
    s.replies.assign(e, std::nullopt);
    for (ProcessId p : distinct(s.echo_sample)) post(out, self, p, {RecordKind::echo_subscribe, {}});
    return s;
}

void sieve_on_subscribe(SieveState& s, ProcessId from, Outbox& out) {
    if (s.echo) post(out, s.self, from, {RecordKind::echo, *s.echo});
    if (std::find(s.echo_subscribers.begin(), s.echo_subscribers.end(), from) == s.echo_subscribers.end())
        s.echo_subscribers.push_back(from);
}

bool sieve_on_pb_deliver(SieveState& s, const Authority& auth, const SignedPayload& payload, Outbox& out) {
    if (s.echo || !auth.verify(s.sender, payload)) return false;
    s.echo = payload;
    for (ProcessId p : s.echo_subscribers) post(out, s.self, p, {RecordKind::echo, payload});
    return true;
}

bool sieve_on_echo(SieveState& s, const Authority& auth, ProcessId from, const SignedPayload& payload) {
    bool filled = false;
    bool verified = false;
    for (std::size_t k = 0; k < s.echo_sample.size(); ++k) {
        if (s.echo_sample[k] != from || s.replies[k]) continue;
        if (!verified) {
            if (!auth.verify(s.sender, payload)) return false;
            verified = true;
        }
        s.replies[k] = payload;
        filled = true;
    }
    return filled;
}

std::optional<SignedPayload> sieve_try_deliver(SieveState& s) {
    if (s.delivered || !s.echo) return std::nullopt;
    std::uint32_t matching = 0;
    for (const auto& r : s.replies)
        if (r && r->message == s.echo->message) ++matching;
    if (matching < s.e_hat) return std::nullopt;
    s.delivered = true;
    return s.echo;
}

}  // namespace pbcast
