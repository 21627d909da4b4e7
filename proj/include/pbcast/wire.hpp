#pragma once

#include "pbcast/core.hpp"

#include <string_view>
#include <vector>

namespace pbcast {

enum class RecordKind : std::uint8_t {
    gossip_subscribe,
    gossip,
    echo_subscribe,
    echo,
    ready_subscribe,
    ready,
};

std::string_view kind_name(RecordKind k);
// Throws ConfigError on an unknown name.
RecordKind kind_from_name(std::string_view s);

inline bool carries_payload(RecordKind k) {
    return k == RecordKind::gossip || k == RecordKind::echo || k == RecordKind::ready;
}

struct Record {
    RecordKind kind{};
    SignedPayload payload{};  // meaningful only when carries_payload(kind)
};

struct Envelope {
    ProcessId src = 0;
    ProcessId dst = 0;
    Record record;
};

// Handlers append sends here; the harness stamps the source.
using Outbox = std::vector<Envelope>;

inline void post(Outbox& out, ProcessId self, ProcessId dst, Record r) { out.push_back({self, dst, r}); }

}  // namespace pbcast
