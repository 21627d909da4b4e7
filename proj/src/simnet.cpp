#include "pbcast/simnet.hpp"

#include <algorithm>
#include <istream>
#include <json.hpp>
#include <numeric>
#include <ostream>

namespace pbcast {

namespace {

constexpr std::array<std::string_view, 12> trace_names = {
    "gossip_subscribe", "gossip",    "echo_subscribe", "echo",       "ready_subscribe", "ready",
    "broadcast",        "inject_pb", "inject_pcb",     "deliver_pb", "deliver_pcb",     "deliver_prb",
};

TraceKind trace_kind(RecordKind k) { return static_cast<TraceKind>(k); }

bool is_link(TraceKind k) { return static_cast<int>(k) <= static_cast<int>(TraceKind::ready); }

std::size_t subscription_slot(RecordKind k) {
    switch (k) {
        case RecordKind::gossip_subscribe: return 0;
        case RecordKind::echo_subscribe: return 1;
        case RecordKind::ready_subscribe: return 2;
        default: return 3;
    }
}

}  // namespace

std::string_view kind_name(RecordKind k) { return trace_names[static_cast<std::size_t>(k)]; }

RecordKind kind_from_name(std::string_view s) {
    for (std::size_t i = 0; i < 6; ++i)
        if (trace_names[i] == s) return static_cast<RecordKind>(i);
    throw ConfigError("unknown record kind: " + std::string(s));
}

void write_jsonl(std::ostream& os, const Trace& t) {
    for (const auto& e : t) {
        nlohmann::json j{{"step", e.step},
                         {"src", e.src},
                         {"dst", e.dst},
                         {"record_kind", trace_names[static_cast<std::size_t>(e.kind)]},
                         {"message", e.message},
                         {"signer", e.signer},
                         {"tag", e.tag}};
        os << j.dump() << '\n';
    }
}

Trace read_jsonl(std::istream& is) {
    Trace t;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            TraceEvent e;
            e.step = j.at("step").get<std::uint64_t>();
            e.src = j.at("src").get<ProcessId>();
            e.dst = j.at("dst").get<ProcessId>();
            e.message = j.at("message").get<Message>();
            e.signer = j.value("signer", ProcessId{0});
            e.tag = j.value("tag", std::uint64_t{0});
            auto name = j.at("record_kind").get<std::string>();
            auto it = std::find(trace_names.begin(), trace_names.end(), name);
            if (it == trace_names.end()) throw ConfigError("unknown record kind: " + name);
            e.kind = static_cast<TraceKind>(it - trace_names.begin());
            t.push_back(e);
        } catch (const nlohmann::json::exception& ex) {
            throw ConfigError(std::string("malformed trace line: ") + ex.what());
        }
    }
    return t;
}

PropertyReport check_properties(const Trace& trace, const SystemConfig& config, ProcessId sender, Layer layer) {
    const auto deliver_kind = static_cast<TraceKind>(static_cast<int>(TraceKind::deliver_pb) + static_cast<int>(layer));
    std::vector<std::vector<Message>> got(config.n);
    std::vector<Message> broadcast;
    for (const auto& e : trace) {
        if (e.kind == TraceKind::broadcast) broadcast.push_back(e.message);
        if (e.kind == deliver_kind && e.dst < config.n) got[e.dst].push_back(e.message);
    }
    PropertyReport r;
    const bool sender_correct = !config.is_byzantine(sender);
    std::optional<Message> first;
    bool anyone = false, everyone = true;
    for (ProcessId p = 0; p < config.correct_count(); ++p) {
        const auto& g = got[p];
        if (g.size() > 1) r.no_duplication = false;
        if (g.empty()) {
            everyone = false;
            continue;
        }
        anyone = true;
        for (Message m : g) {
            if (sender_correct && std::find(broadcast.begin(), broadcast.end(), m) == broadcast.end())
                r.integrity = false;
            if (!first) first = m;
            if (m != *first) r.consistency = false;
        }
    }
    if (sender_correct && !broadcast.empty()) {
        const auto& own = got[sender];
        r.validity = std::find(own.begin(), own.end(), broadcast.front()) != own.end();
        for (ProcessId p = 0; p < config.correct_count(); ++p) {
            const auto& g = got[p];
            if (std::find(g.begin(), g.end(), broadcast.front()) == g.end()) r.total_validity = false;
        }
    }
    r.totality = !anyone || everyone;
    return r;
}

SimWorld::SimWorld(SystemConfig config, ProtocolParams params, WorldOptions options)
    : config_(config),
      params_(params),
      options_(options),
      auth_(mix64(options.seed) ^ 0xa0761d6478bd642fULL),
      schedule_rng_(Rng(options.seed).split(~std::uint64_t{0})) {
    params_.validate();
    if (options_.sender >= config_.n) throw ConfigError("sender outside the process universe");
    const std::uint32_t n = config_.n;
    budget_ = options_.step_budget;
    if (budget_ == 0) {
        // 10 N C, raised for large samples so honest traffic always fits.
        const auto fanout = static_cast<std::uint64_t>(params_.g + params_.e + params_.r + params_.d + 4);
        budget_ = std::max<std::uint64_t>(10ULL * n * config_.correct_count(), 20ULL * n * fanout);
    }
    stacks_.resize(n);
    delivered_.resize(n);
    byz_subscribers_.resize(n);
    Rng master(options_.seed);
    for (ProcessId p = 0; p < config_.correct_count(); ++p) {
        Rng own = master.split(p);
        auto& s = stacks_[p];
        if (options_.base == Base::murmur) {
            Rng r = own.split(0);
            s.pb = murmur_init(p, options_.sender, n, params_.g, r, scratch_);
        } else {
            s.pb.self = p;
            s.pb.sender = options_.sender;
        }
        if (options_.base != Base::pcb_abstract) {
            Rng r = own.split(1);
            s.pcb = sieve_init(p, options_.sender, n, params_.e, params_.e_hat, r, scratch_);
        } else {
            s.pcb.self = p;
            s.pcb.sender = options_.sender;
        }
        Rng r = own.split(2);
        s.prb = contagion_init(p, options_.sender, n, params_, r, scratch_);
    }
    enqueue(scratch_);
}

const std::vector<Message>& SimWorld::deliveries(ProcessId p, Layer layer) const {
    return delivered_.at(p)[static_cast<std::size_t>(layer)];
}

const std::vector<ProcessId>& SimWorld::subscribers(ProcessId byz, RecordKind kind) const {
    static const std::vector<ProcessId> none;
    auto slot = subscription_slot(kind);
    if (byz >= config_.n || slot > 2) return none;
    return byz_subscribers_[byz][slot];
}

void SimWorld::enqueue(Outbox& out) {
    for (auto& e : out) queue_.push_back(e);
    out.clear();
}

void SimWorld::log(TraceKind k, ProcessId src, ProcessId dst, const SignedPayload& p) {
    trace_.push_back({steps_, k, src, dst, p.message, p.sender, p.tag});
}

void SimWorld::charge_step() {
    if (++steps_ > budget_) throw BudgetExceeded("step budget exhausted");
}

void SimWorld::on_pb_deliver(ProcessId p, const SignedPayload& payload) {
    log(TraceKind::deliver_pb, p, p, payload);
    delivered_[p][0].push_back(payload.message);
    if (options_.base == Base::pcb_abstract) return;
    auto& s = stacks_[p];
    if (sieve_on_pb_deliver(s.pcb, auth_, payload, scratch_))
        if (auto d = sieve_try_deliver(s.pcb)) on_pcb_deliver(p, *d);
}

void SimWorld::on_pcb_deliver(ProcessId p, const SignedPayload& payload) {
    log(TraceKind::deliver_pcb, p, p, payload);
    delivered_[p][1].push_back(payload.message);
    auto& s = stacks_[p];
    if (contagion_on_pcb_deliver(s.prb, auth_, payload, scratch_))
        if (auto d = contagion_step(s.prb, scratch_)) on_prb_deliver(p, *d);
}

void SimWorld::on_prb_deliver(ProcessId p, const SignedPayload& payload) {
    log(TraceKind::deliver_prb, p, p, payload);
    delivered_[p][2].push_back(payload.message);
}

void SimWorld::handle(const Envelope& env) {
    const ProcessId p = env.dst;
    if (options_.record_links) log(trace_kind(env.record.kind), env.src, env.dst, env.record.payload);
    if (config_.is_byzantine(p)) {
        auto slot = subscription_slot(env.record.kind);
        if (slot <= 2 && !config_.is_byzantine(env.src)) {
            auto& subs = byz_subscribers_[p][slot];
            if (std::find(subs.begin(), subs.end(), env.src) == subs.end()) subs.push_back(env.src);
        }
        return;
    }
    auto& s = stacks_[p];
    const auto& pl = env.record.payload;
    switch (env.record.kind) {
        case RecordKind::gossip_subscribe:
            if (options_.base == Base::murmur) murmur_on_subscribe(s.pb, env.src, scratch_);
            break;
        case RecordKind::gossip:
            if (options_.base == Base::murmur)
                if (auto d = murmur_on_gossip(s.pb, auth_, pl, scratch_)) on_pb_deliver(p, *d);
            break;
        case RecordKind::echo_subscribe:
            if (options_.base != Base::pcb_abstract) sieve_on_subscribe(s.pcb, env.src, scratch_);
            break;
        case RecordKind::echo:
            if (options_.base != Base::pcb_abstract && sieve_on_echo(s.pcb, auth_, env.src, pl))
                if (auto d = sieve_try_deliver(s.pcb)) on_pcb_deliver(p, *d);
            break;
        case RecordKind::ready_subscribe: contagion_on_subscribe(s.prb, env.src, scratch_); break;
        case RecordKind::ready:
            if (auto d = contagion_on_ready(s.prb, auth_, env.src, pl, scratch_)) on_prb_deliver(p, *d);
            break;
    }
    enqueue(scratch_);
}

void SimWorld::drain() {
    while (head_ < queue_.size()) {
        if (options_.schedule == Schedule::random_interleave) {
            auto span = static_cast<std::uint32_t>(queue_.size() - head_);
            std::swap(queue_[head_], queue_[head_ + schedule_rng_.uniform(span)]);
        }
        Envelope env = queue_[head_++];
        charge_step();
        handle(env);
        if (head_ > 4096 && head_ * 2 > queue_.size()) {
            queue_.erase(queue_.begin(), queue_.begin() + static_cast<std::ptrdiff_t>(head_));
            head_ = 0;
        }
    }
    queue_.clear();
    head_ = 0;
}

void SimWorld::deliver(const Envelope& env) {
    auto same = [&](const Envelope& q) {
        return q.src == env.src && q.dst == env.dst && q.record.kind == env.record.kind &&
               (!carries_payload(q.record.kind) || q.record.payload == env.record.payload);
    };
    auto it = std::find_if(queue_.begin() + static_cast<std::ptrdiff_t>(head_), queue_.end(), same);
    if (it != queue_.end()) {
        queue_.erase(it);
    } else if (!config_.is_byzantine(env.src)) {
        throw ExecutionFailure("replay diverged: no pending message matches");
    }
    charge_step();
    handle(env);
}

void SimWorld::honest_broadcast(Message m) {
    const ProcessId s = options_.sender;
    if (config_.is_byzantine(s)) throw ExecutionFailure("honest broadcast from a Byzantine sender");
    if (!delivered_[s][0].empty() || !delivered_[s][1].empty()) throw ExecutionFailure("sender already broadcast");
    auto payload = auth_.sign(s, m);
    log(TraceKind::broadcast, s, s, payload);
    if (options_.base == Base::murmur) {
        if (auto d = murmur_broadcast(stacks_[s].pb, payload, scratch_)) on_pb_deliver(s, *d);
    } else if (options_.base == Base::pb_abstract) {
        stacks_[s].pb.delivered = payload;
        on_pb_deliver(s, payload);
    } else {
        on_pcb_deliver(s, payload);
    }
    enqueue(scratch_);
}

void SimWorld::inject_pb_deliver(ProcessId p, const SignedPayload& payload) {
    if (options_.base == Base::murmur) throw ExecutionFailure("pb is a real protocol in this world");
    if (p >= config_.n || config_.is_byzantine(p)) throw ExecutionFailure("pb delivery target is not correct");
    if (!delivered_[p][0].empty()) throw ExecutionFailure("process already pb-delivered");
    if (!auth_.verify(options_.sender, payload)) throw ExecutionFailure("payload does not verify");
    log(TraceKind::inject_pb, p, p, payload);
    stacks_[p].pb.delivered = payload;
    on_pb_deliver(p, payload);
    enqueue(scratch_);
}

void SimWorld::inject_pcb_deliver(ProcessId p, const SignedPayload& payload) {
    if (options_.base != Base::pcb_abstract) throw ExecutionFailure("pcb is a real protocol in this world");
    if (p >= config_.n || config_.is_byzantine(p)) throw ExecutionFailure("pcb delivery target is not correct");
    if (!delivered_[p][1].empty()) throw ExecutionFailure("process already pcb-delivered");
    if (!auth_.verify(options_.sender, payload)) throw ExecutionFailure("payload does not verify");
    log(TraceKind::inject_pcb, p, p, payload);
    on_pcb_deliver(p, payload);
    enqueue(scratch_);
}

void SimWorld::byzantine_send(ProcessId from, ProcessId to, Record r) {
    if (from >= config_.n || !config_.is_byzantine(from)) throw ExecutionFailure("only Byzantine processes are driven");
    if (to >= config_.n) throw ExecutionFailure("destination outside the universe");
    queue_.push_back({from, to, r});
}

SignedPayload AdversaryApi::sign(ProcessId byz, Message m) const {
    if (byz >= w_.config().n || !w_.config().is_byzantine(byz))
        throw ExecutionFailure("adversary cannot sign for a correct process");
    return w_.authority().sign(byz, m);
}

std::vector<std::pair<ProcessId, Message>> AdversaryApi::state(Layer layer) const {
    std::vector<std::pair<ProcessId, Message>> out;
    for (ProcessId p = 0; p < w_.config().correct_count(); ++p)
        for (Message m : w_.deliveries(p, layer)) out.emplace_back(p, m);
    return out;
}

RunSummary run_to_quiescence(SimWorld& world, Adversary& adversary) {
    AdversaryApi api(world);
    world.drain();
    std::uint64_t acts = 0;
    while (adversary.act(api)) {
        if (++acts > world.budget()) throw BudgetExceeded("adversary never ended the execution");
        world.drain();
    }
    world.drain();
    RunSummary out;
    const auto& c = world.config();
    const auto s = world.options().sender;
    out.pb = check_properties(world.trace(), c, s, Layer::pb);
    out.pcb = check_properties(world.trace(), c, s, Layer::pcb);
    out.prb = check_properties(world.trace(), c, s, Layer::prb);
    out.steps = world.steps();
    return out;
}

Trace replay(const SystemConfig& config, const ProtocolParams& params, WorldOptions options, const Trace& trace) {
    options.record_links = true;
    SimWorld w(config, params, options);
    for (const auto& e : trace) {
        SignedPayload p{e.signer, e.message, e.tag};
        if (is_link(e.kind)) {
            w.deliver({e.src, e.dst, {static_cast<RecordKind>(e.kind), p}});
        } else if (e.kind == TraceKind::broadcast) {
            w.honest_broadcast(e.message);
        } else if (e.kind == TraceKind::inject_pb) {
            w.inject_pb_deliver(e.dst, p);
        } else if (e.kind == TraceKind::inject_pcb) {
            w.inject_pcb_deliver(e.dst, p);
        }
    }
    return w.trace();
}

bool gossip_graph_connected(const SimWorld& w) {
    const auto c = w.config().correct_count();
    std::vector<ProcessId> parent(c);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](ProcessId x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::uint32_t components = c;
    for (ProcessId p = 0; p < c; ++p)
        for (ProcessId q : w.stack(p).pb.gossip_sample) {
            if (q >= c) continue;
            auto a = find(p), b = find(q);
            if (a != b) {
                parent[a] = b;
                --components;
            }
        }
    return components == 1;
}

}  // namespace pbcast
