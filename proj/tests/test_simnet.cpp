#include "pbcast/adversaries.hpp"
#include "pbcast/bounds.hpp"
#include "pbcast/simnet.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace pbcast;

namespace {

class Stubborn : public Adversary {
public:
    bool act(AdversaryApi&) override { return true; }
};

class ForgeForCorrect : public Adversary {
public:
    bool act(AdversaryApi& api) override {
        api.sign(0, 1);
        return false;
    }
};

RunSummary honest_run(std::uint32_t n, double f, const ProtocolParams& p, std::uint64_t seed, SimWorld** keep = nullptr) {
    static std::unique_ptr<SimWorld> last;
    WorldOptions o;
    o.seed = seed;
    last = std::make_unique<SimWorld>(make_config(n, f), p, o);
    auto adv = passive_adversary();
    auto s = run_to_quiescence(*last, *adv);
    if (keep) *keep = last.get();
    return s;
}

}  // namespace

TEST_CASE("trivial worlds") {
    WorldOptions o;
    SimWorld one(make_config(1, 0.0), default_params(), o);
    auto adv = passive_adversary();
    auto s = run_to_quiescence(one, *adv);
    CHECK(one.deliveries(0, Layer::prb) == std::vector<Message>{1});
    CHECK(s.prb.all_hold());

    SimWorld w(make_config(10, 0.0), default_params(), o);
    for (ProcessId b = 0; b < 10; ++b)
        for (auto k : {RecordKind::gossip_subscribe, RecordKind::echo_subscribe, RecordKind::ready_subscribe})
            CHECK(w.subscribers(b, k).empty());
}

TEST_CASE("world construction validates params") {
    ProtocolParams p = default_params();
    p.e_hat = p.e + 1;
    CHECK_THROWS_AS(SimWorld(make_config(10, 0.0), p, {}), ConfigError);
    WorldOptions o;
    o.sender = 10;
    CHECK_THROWS_AS(SimWorld(make_config(10, 0.0), default_params(), o), ConfigError);
}

TEST_CASE("honest runs deliver everywhere when the gossip graph is connected") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SimWorld* w = nullptr;
        auto s = honest_run(60, 0.0, default_params(), seed, &w);
        CHECK(w->pending() == 0);
        CHECK(s.pb.no_duplication);
        CHECK(s.pcb.integrity);
        if (gossip_graph_connected(*w)) {
            CHECK(s.pb.all_hold());
            CHECK(s.pb.total_validity);
            CHECK(s.pcb.total_validity);
            CHECK(s.prb.total_validity);
        }
    }
}

TEST_CASE("gossip links are reciprocated at quiescence") {
    SimWorld* w = nullptr;
    honest_run(40, 0.0, default_params(), 3, &w);
    for (ProcessId p = 0; p < 40; ++p)
        for (ProcessId q : w->stack(p).pb.gossip_sample) {
            const auto& back = w->stack(q).pb.gossip_sample;
            CHECK(std::find(back.begin(), back.end(), p) != back.end());
        }
}

TEST_CASE("seeded runs are bit-identical and replay") {
    auto run = [](std::uint64_t seed, Schedule sched) {
        WorldOptions o;
        o.seed = seed;
        o.schedule = sched;
        o.record_links = true;
        SimWorld w(make_config(30, 0.1), default_params(), o);
        auto adv = passive_adversary();
        run_to_quiescence(w, *adv);
        return w.trace();
    };
    for (auto sched : {Schedule::drain_fifo, Schedule::random_interleave}) {
        auto a = run(17, sched), b = run(17, sched);
        CHECK(a == b);
        WorldOptions o;
        o.seed = 17;
        o.schedule = sched;
        CHECK(replay(make_config(30, 0.1), default_params(), o, a) == a);
    }
    CHECK(run(17, Schedule::drain_fifo) != run(18, Schedule::drain_fifo));
}

TEST_CASE("jsonl round trip") {
    WorldOptions o;
    o.record_links = true;
    SimWorld w(make_config(12, 0.0), default_params(), o);
    auto adv = passive_adversary();
    run_to_quiescence(w, *adv);
    std::stringstream ss;
    write_jsonl(ss, w.trace());
    CHECK(read_jsonl(ss) == w.trace());
    std::stringstream bad("{\"step\": 1}\n");
    CHECK_THROWS_AS(read_jsonl(bad), ConfigError);
    std::stringstream junk("not json\n");
    CHECK_THROWS_AS(read_jsonl(junk), ConfigError);
}

TEST_CASE("check_properties flags") {
    auto c = make_config(4, 0.0);
    CHECK(check_properties({}, c, 0, Layer::pcb).all_hold());

    Trace dup{{0, TraceKind::broadcast, 0, 0, 1},
              {1, TraceKind::deliver_pcb, 0, 0, 1},
              {2, TraceKind::deliver_pcb, 1, 1, 1},
              {3, TraceKind::deliver_pcb, 1, 1, 1}};
    auto r = check_properties(dup, c, 0, Layer::pcb);
    CHECK_FALSE(r.no_duplication);
    CHECK_FALSE(r.totality);
    CHECK(r.validity);

    Trace split{{1, TraceKind::deliver_prb, 0, 0, 1}, {2, TraceKind::deliver_prb, 1, 1, 2}};
    CHECK_FALSE(check_properties(split, make_config(4, 0.25), 3, Layer::prb).consistency);

    Trace forged{{0, TraceKind::broadcast, 0, 0, 1}, {1, TraceKind::deliver_pb, 2, 2, 5}};
    CHECK_FALSE(check_properties(forged, c, 0, Layer::pb).integrity);
}

TEST_CASE("adversary misuse") {
    WorldOptions o;
    SimWorld w(make_config(10, 0.2), default_params(), o);
    Stubborn stubborn;
    CHECK_THROWS_AS(run_to_quiescence(w, stubborn), BudgetExceeded);

    SimWorld w2(make_config(10, 0.2), default_params(), o);
    ForgeForCorrect forge;
    CHECK_THROWS_AS(run_to_quiescence(w2, forge), ExecutionFailure);

    SimWorld w3(make_config(10, 0.2), default_params(), o);
    CHECK_THROWS_AS(w3.inject_pb_deliver(1, w3.authority().sign(0, 1)), ExecutionFailure);
    CHECK_THROWS_AS(w3.byzantine_send(0, 1, {RecordKind::ready, {}}), ExecutionFailure);
    w3.honest_broadcast(1);
    CHECK_THROWS_AS(w3.honest_broadcast(2), ExecutionFailure);

    o.base = Base::pcb_abstract;
    SimWorld w4(make_config(10, 0.2), default_params(), o);
    auto m = w4.authority().sign(0, 1);
    w4.inject_pcb_deliver(3, m);
    CHECK_THROWS_AS(w4.inject_pcb_deliver(3, m), ExecutionFailure);
    CHECK_THROWS_AS(w4.inject_pcb_deliver(9, m), ExecutionFailure);
    CHECK_THROWS_AS(w4.inject_pcb_deliver(4, SignedPayload{0, 1, 0}), ExecutionFailure);
}

TEST_CASE("Byzantine processes learn their subscribers") {
    WorldOptions o;
    SimWorld w(make_config(20, 0.25), default_params(), o);
    w.drain();
    std::size_t subs = 0;
    for (ProcessId b = 15; b < 20; ++b) subs += w.subscribers(b, RecordKind::echo_subscribe).size();
    std::size_t expected = 0;
    for (ProcessId p = 0; p < 15; ++p) {
        auto s = w.stack(p).pcb.echo_sample;
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        for (auto q : s) expected += q >= 15;
    }
    CHECK(subs == expected);
}

TEST_CASE("Sieve total validity with a silent adversary stays under its bound") {
    ProtocolParams p = default_params();
    p.g = 8;
    p.e = 20;
    p.e_hat = 13;
    const std::uint32_t n = 50;
    const double f = 0.1;
    const int runs = 2000;
    int failures = 0;
    for (int i = 0; i < runs; ++i) failures += !honest_run(n, f, p, 1000 + i).pcb.total_validity;
    const auto c = make_config(n, f).correct_count();
    const double pl = gossip_link_probability(n, p.g);
    const double bound = std::exp(sieve_total_validity_bound(c, f, p.e, p.e_hat, murmur_totality_bound(c, pl)));
    const double freq = double(failures) / runs;
    CHECK(freq <= bound + 3 * std::sqrt(bound * (1 - bound) / runs) + 1e-12);
}
