#include "pbcast/adversaries.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <json.hpp>
#include <ostream>

namespace pbcast {

namespace {

class PassiveAdversary : public Adversary {
public:
    explicit PassiveAdversary(Message m) : m_(m) {}
    bool act(AdversaryApi& api) override {
        if (done_) return false;
        done_ = true;
        if (!api.config().is_byzantine(api.sender())) api.honest_broadcast(m_);
        return false;
    }

private:
    Message m_;
    bool done_ = false;
};

std::uint32_t correct_prb_deliveries(const SimWorld& w) {
    std::uint32_t k = 0;
    for (ProcessId p = 0; p < w.config().correct_count(); ++p) k += !w.deliveries(p, Layer::prb).empty();
    return k;
}

void release_ready(SimWorld& w, const SignedPayload& payload) {
    const auto& c = w.config();
    for (ProcessId b = c.correct_count(); b < c.n; ++b)
        for (ProcessId q : w.subscribers(b, RecordKind::ready_subscribe))
            w.byzantine_send(b, q, {RecordKind::ready, payload});
}

ProcessId byzantine_sender(const SystemConfig& c) {
    if (c.byzantine_count == 0) throw ConfigError("the attack needs a Byzantine sender");
    return c.n - 1;
}

}  // namespace

std::unique_ptr<Adversary> passive_adversary(Message m) { return std::make_unique<PassiveAdversary>(m); }

std::string population_key(const ByzantineCounts& f) {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (auto x : f) h = mix64(h ^ x);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void TwoPhaseTable::validate() const {
    auto check = [&](const std::vector<Message>& v, std::size_t len) {
        if (v.size() != len) throw ConfigError("two-phase table row has the wrong length");
        for (Message m : v)
            if (m < 1 || m > c) throw ConfigError("two-phase table names a message outside 1..C");
    };
    if (!first.count("*")) throw ConfigError("two-phase table lacks a default first phase");
    for (const auto& [key, row] : first) check(row, c);
    auto def = second.find("*");
    for (std::uint32_t n = 1; n <= c; ++n)
        if (def == second.end() || !def->second.count(n))
            throw ConfigError("two-phase table lacks a default second phase for n = " + std::to_string(n));
    for (const auto& [key, rows] : second)
        for (const auto& [n, row] : rows) {
            if (n < 1 || n > c) throw ConfigError("two-phase table indexes n outside 1..C");
            check(row, c - n);
        }
}

const std::vector<Message>& TwoPhaseTable::first_phase(const ByzantineCounts& f) const {
    auto it = first.find(population_key(f));
    return it != first.end() ? it->second : first.at("*");
}

const std::vector<Message>& TwoPhaseTable::second_phase(const ByzantineCounts& f, std::uint32_t n) const {
    auto it = second.find(population_key(f));
    if (it != second.end()) {
        auto row = it->second.find(n);
        if (row != it->second.end()) return row->second;
    }
    return second.at("*").at(n);
}

TwoPhaseTable default_two_phase_table(std::uint32_t c) {
    TwoPhaseTable t;
    t.c = c;
    t.first["*"] = std::vector<Message>(c, 1);
    for (std::uint32_t n = 1; n <= c; ++n) t.second["*"][n] = std::vector<Message>(c - n, std::min<Message>(2, c));
    return t;
}

void write_json(std::ostream& os, const TwoPhaseTable& t) {
    nlohmann::json second = nlohmann::json::object();
    for (const auto& [key, rows] : t.second)
        for (const auto& [n, row] : rows) second[key][std::to_string(n)] = row;
    nlohmann::json j{{"c", t.c}, {"first", t.first}, {"second", second}};
    os << j.dump(2) << '\n';
}

TwoPhaseTable read_two_phase_table(std::istream& is) {
    TwoPhaseTable t;
    try {
        auto j = nlohmann::json::parse(is);
        t.c = j.at("c").get<std::uint32_t>();
        t.first = j.at("first").get<std::map<std::string, std::vector<Message>>>();
        for (const auto& [key, rows] : j.at("second").items())
            for (const auto& [n, row] : rows.items())
                t.second[key][static_cast<std::uint32_t>(std::stoul(n))] = row.get<std::vector<Message>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad two-phase table: ") + e.what());
    } catch (const std::logic_error&) {
        throw ConfigError("bad two-phase table: non-numeric n");
    }
    t.validate();
    return t;
}

SieveGameResult run_simplified_sieve_game(const SystemConfig& config, const ProtocolParams& params,
                                          const TwoPhaseTable& table, std::uint64_t seed) {
    params.validate();
    byzantine_sender(config);
    const std::uint32_t c = config.correct_count();
    if (table.c != c) throw ConfigError("two-phase table built for a different C");
    table.validate();

    Rng master(seed);
    std::vector<std::vector<ProcessId>> sample(c);
    ByzantineCounts f(c, 0);
    // watchers[q] lists (p, multiplicity of q in p's sample).
    std::vector<std::vector<std::pair<ProcessId, std::uint32_t>>> watchers(c);
    for (ProcessId p = 0; p < c; ++p) {
        Rng r = master.split(p);
        sample[p] = sample_with_replacement(config.n, params.e, r);
        std::sort(sample[p].begin(), sample[p].end());
        for (std::size_t k = 0; k < sample[p].size();) {
            std::size_t j = k;
            while (j < sample[p].size() && sample[p][j] == sample[p][k]) ++j;
            const auto q = sample[p][k];
            const auto mult = static_cast<std::uint32_t>(j - k);
            if (config.is_byzantine(q))
                f[p] += mult;
            else
                watchers[q].emplace_back(p, mult);
            k = j;
        }
    }

    std::vector<Message> echo(c, 0);
    std::vector<std::uint32_t> matching(c, 0);
    std::vector<Message> delivered(c, 0);
    std::vector<Message> order;  // distinct delivered messages, first first
    auto try_deliver = [&](ProcessId p) {
        if (delivered[p] || !echo[p] || f[p] + matching[p] < params.e_hat) return;
        delivered[p] = echo[p];
        if (std::find(order.begin(), order.end(), echo[p]) == order.end()) order.push_back(echo[p]);
    };
    auto pb_deliver = [&](ProcessId q, Message m) {
        echo[q] = m;
        matching[q] = 0;
        for (auto k : sample[q])
            if (k < c && echo[k] == m) ++matching[q];
        for (auto [p, mult] : watchers[q])
            if (p != q && echo[p] == m) matching[p] += mult;
        try_deliver(q);
        for (auto [p, mult] : watchers[q]) try_deliver(p);
    };

    SieveGameResult out;
    const auto& first = table.first_phase(f);
    std::uint32_t n = 0;
    while (n < c && order.empty()) pb_deliver(n, first[n]), ++n;
    if (order.empty()) return out;
    out.n_h = n;
    const auto& second = table.second_phase(f, n);
    for (std::uint32_t j = 0; j < second.size(); ++j) pb_deliver(n + j, second[j]);
    out.consistency_violated = order.size() >= 2;
    return out;
}

ContagionConsistencyAdversary::ContagionConsistencyAdversary(Message m_star, Message m_alt)
    : m_star_(m_star), m_alt_(m_alt) {
    if (m_star == m_alt) throw ConfigError("m_alt must differ from m_star");
}

bool ContagionConsistencyAdversary::act(AdversaryApi& api) {
    const auto& c = api.config();
    const ProcessId s = api.sender();
    if (!readied_) {
        readied_ = true;
        for (ProcessId b = c.correct_count(); b < c.n; ++b)
            for (ProcessId q : api.subscribers(b, RecordKind::ready_subscribe)) {
                api.send(b, q, {RecordKind::ready, api.sign(s, m_alt_)});
                api.send(b, q, {RecordKind::ready, api.sign(s, m_star_)});
            }
        return true;
    }
    if (next_ >= c.correct_count()) return false;
    api.cause_pcb_deliver(next_++, api.sign(s, m_star_));
    return true;
}

bool ContagionConsistencyAdversary::succeeded(const SimWorld& w) const {
    for (ProcessId p = 0; p < w.config().correct_count(); ++p) {
        const auto& d = w.deliveries(p, Layer::prb);
        if (std::find(d.begin(), d.end(), m_alt_) != d.end()) return true;
    }
    return false;
}

bool ContagionTotalityAdversary::act(AdversaryApi& api) {
    if (done_) return false;
    const auto& c = api.config();
    const std::uint32_t correct = c.correct_count();
    if (round_ == 0) {
        api.honest_broadcast(m_);
        round_ = 1;
        return true;
    }
    const SimWorld& view = api.clairvoyant_view();
    const std::uint32_t now = correct_prb_deliveries(view);
    if (now > 0) {
        done_ = true;
        return false;
    }
    // The sender's stack holds the payload every correct process will see.
    const SignedPayload payload = view.stack(api.sender()).prb.seen.front();
    SimWorld trial = view;
    release_ready(trial, payload);
    trial.drain();
    const std::uint32_t pushed = correct_prb_deliveries(trial);
    if (pushed > 0 && pushed < correct) {
        for (ProcessId b = correct; b < c.n; ++b)
            for (ProcessId q : api.subscribers(b, RecordKind::ready_subscribe))
                api.send(b, q, {RecordKind::ready, payload});
        done_ = true;
        return false;
    }
    if (round_ >= correct) {
        done_ = true;
        return false;
    }
    ProcessId next = 0;
    while (next < correct && (next == api.sender() || !view.deliveries(next, Layer::pcb).empty())) ++next;
    api.cause_pcb_deliver(next, payload);
    ++round_;
    return true;
}

AttackOutcome run_contagion_consistency_attack(const SystemConfig& config, const ProtocolParams& params,
                                               std::uint64_t seed) {
    if (config.byzantine_count == 0) return {};
    WorldOptions o;
    o.seed = seed;
    o.sender = byzantine_sender(config);
    o.base = Base::pcb_abstract;
    SimWorld w(config, params, o);
    ContagionConsistencyAdversary adv(1, 2);
    auto summary = run_to_quiescence(w, adv);
    return {adv.succeeded(w), summary.steps};
}

AttackOutcome run_contagion_totality_attack(const SystemConfig& config, const ProtocolParams& params,
                                            std::uint64_t seed) {
    WorldOptions o;
    o.seed = seed;
    o.sender = 0;
    o.base = Base::pcb_abstract;
    SimWorld w(config, params, o);
    ContagionTotalityAdversary adv;
    auto summary = run_to_quiescence(w, adv);
    return {!summary.prb.totality, summary.steps};
}

}  // namespace pbcast
