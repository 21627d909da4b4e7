#pragma once

#include "pbcast/contagion.hpp"
#include "pbcast/murmur.hpp"
#include "pbcast/sieve.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>

namespace pbcast {

enum class Layer : std::uint8_t { pb, pcb, prb };

// Lowest layer run as a real protocol. Below it the adversary plays the
// abstraction through AdversaryApi::cause_*_deliver.
enum class Base : std::uint8_t { murmur, pb_abstract, pcb_abstract };

enum class Schedule : std::uint8_t {
    drain_fifo,         // adversary acts, then all consequent traffic drains in FIFO order
    random_interleave,  // same, but each step picks a uniformly random pending message
};

struct WorldOptions {
    std::uint64_t seed = 0;
    ProcessId sender = 0;
    Base base = Base::murmur;
    Schedule schedule = Schedule::drain_fifo;
    std::uint64_t step_budget = 0;  // 0 means the default
    bool record_links = false;      // log every link message, not only local events
};

enum class TraceKind : std::uint8_t {
    gossip_subscribe,
    gossip,
    echo_subscribe,
    echo,
    ready_subscribe,
    ready,
    broadcast,
    inject_pb,
    inject_pcb,
    deliver_pb,
    deliver_pcb,
    deliver_prb,
};

struct TraceEvent {
    std::uint64_t step = 0;
    TraceKind kind{};
    ProcessId src = 0;
    ProcessId dst = 0;
    Message message = 0;
    ProcessId signer = 0;
    std::uint64_t tag = 0;
    bool operator==(const TraceEvent&) const = default;
};

using Trace = std::vector<TraceEvent>;

void write_jsonl(std::ostream& os, const Trace& t);
// Throws ConfigError on malformed input.
Trace read_jsonl(std::istream& is);

struct PropertyReport {
    bool no_duplication = true;
    bool integrity = true;
    bool validity = true;        // a correct sender delivers what it broadcast
    bool total_validity = true;  // every correct process delivers a correct sender's message
    bool totality = true;
    bool consistency = true;
    bool all_hold() const { return no_duplication && integrity && validity && totality && consistency; }
};

// Projection of a trace onto one layer's delivery events.
PropertyReport check_properties(const Trace& trace, const SystemConfig& config, ProcessId sender, Layer layer);

struct Stack {
    MurmurState pb;
    SieveState pcb;
    ContagionState prb;
};

class SimWorld {
public:
    SimWorld(SystemConfig config, ProtocolParams params, WorldOptions options);

    const SystemConfig& config() const { return config_; }
    const ProtocolParams& params() const { return params_; }
    const WorldOptions& options() const { return options_; }
    const Authority& authority() const { return auth_; }
    const Trace& trace() const { return trace_; }
    const Stack& stack(ProcessId p) const { return stacks_[p]; }
    std::uint64_t steps() const { return steps_; }
    std::uint64_t budget() const { return budget_; }
    std::size_t pending() const { return queue_.size() - head_; }

    // Messages delivered at `layer`, per process, in delivery order.
    const std::vector<Message>& deliveries(ProcessId p, Layer layer) const;

    // Runs every pending link message to completion under the schedule.
    void drain();
    // Delivers one specific envelope immediately (used by replay).
    void deliver(const Envelope& env);

    void honest_broadcast(Message m);
    void inject_pb_deliver(ProcessId p, const SignedPayload& payload);
    void inject_pcb_deliver(ProcessId p, const SignedPayload& payload);
    void byzantine_send(ProcessId from, ProcessId to, Record r);
    // Correct processes that sent a subscription of `kind` to Byzantine `byz`.
    const std::vector<ProcessId>& subscribers(ProcessId byz, RecordKind kind) const;

private:
    void charge_step();
    void enqueue(Outbox& out);
    void log(TraceKind k, ProcessId src, ProcessId dst, const SignedPayload& p);
    void on_pb_deliver(ProcessId p, const SignedPayload& payload);
    void on_pcb_deliver(ProcessId p, const SignedPayload& payload);
    void on_prb_deliver(ProcessId p, const SignedPayload& payload);
    void handle(const Envelope& env);

    SystemConfig config_;
    ProtocolParams params_;
    WorldOptions options_;
    Authority auth_;
    Rng schedule_rng_;
    std::vector<Stack> stacks_;
    std::vector<std::array<std::vector<Message>, 3>> delivered_;
    std::vector<std::array<std::vector<ProcessId>, 3>> byz_subscribers_;
    std::vector<Envelope> queue_;
    std::size_t head_ = 0;
    Outbox scratch_;
    Trace trace_;
    std::uint64_t steps_ = 0;
    std::uint64_t budget_ = 0;
};

// The adversary's control surface. It sees deliveries and whatever reaches
// Byzantine processes, never the samples of correct processes.
class AdversaryApi {
public:
    explicit AdversaryApi(SimWorld& w) : w_(w) {}

    const SystemConfig& config() const { return w_.config(); }
    ProcessId sender() const { return w_.options().sender; }
    SignedPayload sign(ProcessId byz, Message m) const;
    void send(ProcessId byz, ProcessId to, Record r) { w_.byzantine_send(byz, to, r); }
    const std::vector<ProcessId>& subscribers(ProcessId byz, RecordKind kind) const { return w_.subscribers(byz, kind); }
    void honest_broadcast(Message m) { w_.honest_broadcast(m); }
    void cause_pb_deliver(ProcessId p, const SignedPayload& payload) { w_.inject_pb_deliver(p, payload); }
    void cause_pcb_deliver(ProcessId p, const SignedPayload& payload) { w_.inject_pcb_deliver(p, payload); }
    // (process, message) delivery pairs at one layer.
    std::vector<std::pair<ProcessId, Message>> state(Layer layer) const;

    // Full view of the world. Only analysis adversaries that deliberately
    // model a clairvoyant attacker use this.
    const SimWorld& clairvoyant_view() const { return w_; }

private:
    SimWorld& w_;
};

class Adversary {
public:
    virtual ~Adversary() = default;
    // One adversarial step. Returning false is the End() call.
    virtual bool act(AdversaryApi& api) = 0;
};

struct RunSummary {
    PropertyReport pb, pcb, prb;
    std::uint64_t steps = 0;
};

RunSummary run_to_quiescence(SimWorld& world, Adversary& adversary);

// Re-executes a recorded trace on a fresh world with the same configuration;
// returns the trace the replay produced.
Trace replay(const SystemConfig& config, const ProtocolParams& params, WorldOptions options, const Trace& trace);

// True when the undirected gossip graph over correct processes is connected.
bool gossip_graph_connected(const SimWorld& w);

}  // namespace pbcast
