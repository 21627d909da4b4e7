#include "oracles.hpp"
#include "pbcast/bounds.hpp"
#include "pbcast/numerics.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace pbcast;

TEST_CASE("murmur totality bound") {
    CHECK(murmur_totality_bound(1, 0.3) == log_zero);
    CHECK(murmur_totality_bound(2, 1.0) == log_zero);
    CHECK(gossip_link_probability(4, 2) == doctest::Approx(0.75));
    CHECK(std::exp(murmur_totality_bound(2, 0.75)) == doctest::Approx(0.5));
    CHECK(murmur_totality_bound(50, 0.0) == 0.0);
    CHECK_THROWS_AS(murmur_totality_bound(5, 1.5), DomainError);
    // Against a 50-digit evaluation of the same sum.
    const unsigned c = 120;
    const double p = gossip_link_probability(130, 6);
    oracle::big s = 0;
    for (unsigned k = 1; k <= c / 2; ++k) s += oracle::choose(c, k) * pow(1 - oracle::big(p), k * (c - k));
    CHECK(murmur_totality_bound(c, p) == doctest::Approx(oracle::ln(s)).epsilon(1e-10));
}

TEST_CASE("murmur latency") {
    CHECK(murmur_latency(std::uint32_t(std::round(std::exp(5.0))), 0.0, std::exp(1.0)) ==
          doctest::Approx(std::log(std::round(std::exp(5.0))) / (std::log(2.0) + 1)));
    CHECK(murmur_latency(1024, 0.0, 1.0) == doctest::Approx(10.0));
    CHECK(murmur_latency(1024, 0.1, 8) < murmur_latency(1024, 0.1, 4));
    CHECK_THROWS_AS(murmur_latency(100, 0.5, 1.0), DomainError);
    CHECK_THROWS_AS(murmur_latency(100, 0.9, 2.0), DomainError);
}

TEST_CASE("sieve total validity bound") {
    const double pb = std::log(0.01);
    CHECK(sieve_total_validity_bound(100, 0.0, 10, 7, pb) == doctest::Approx(pb));
    CHECK(sieve_total_validity_bound(100, 0.3, 10, 0, pb) == doctest::Approx(pb));
    CHECK(std::exp(sieve_total_validity_bound(1, 0.5, 2, 2, log_zero)) == doctest::Approx(0.75));
    CHECK_THROWS_AS(sieve_total_validity_bound(1, 0.5, 2, 3, log_zero), DomainError);
}

TEST_CASE("sieve consistency bound") {
    auto zero = sieve_consistency_detail(50, 0.0, 10, 6);
    CHECK(zero.log_eps_p == log_zero);
    CHECK(sieve_poisoned_probability(5, 0.99, 4, 4) < 0.0);
    CHECK(sieve_consistency_bound(5, 1.0, 4, 4) == 0.0);

    auto d = sieve_consistency_detail(60, 0.1, 40, 30);
    double sum = 0;
    for (double x : d.psi_tilde) {
        CHECK(x >= 0.0);
        sum += x;
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK(d.psi_tilde[0] == 0.0);
    for (double x : d.phi_tilde) CHECK((x >= 0.0 && x <= 1.0));
    CHECK(d.log_eps_c >= d.log_eps_p);
    CHECK(d.log_eps_c <= 0.0);
}

TEST_CASE("contagion validity bound") {
    const double v = std::log(0.02);
    CHECK(contagion_validity_bound(10, 6, 0.0, v) == doctest::Approx(v));
    CHECK(contagion_validity_bound(10, 0, 0.4, v) == doctest::Approx(v));
    CHECK(std::exp(contagion_validity_bound(2, 2, 0.5, log_zero)) == doctest::Approx(0.75));
}

TEST_CASE("contagion consistency bound") {
    // R_hat = 0 infects everyone.
    CHECK(contagion_consistency_bound(20, 15, 6, 0, 8, 6, log_zero).log_mu == doctest::Approx(0.0));
    // No Byzantine process: nothing is infected, nobody crosses D_hat >= 1.
    CHECK(contagion_consistency_bound(20, 20, 6, 3, 8, 6, log_zero).log_mu == log_zero);
    auto cc = contagion_consistency_bound(20, 15, 6, 3, 8, 6, std::log(1e-3));
    CHECK(cc.log_eps_c >= cc.log_mu);
    CHECK(cc.log_eps_c >= std::log(1e-3));
    CHECK_THROWS_AS(contagion_consistency_bound(20, 15, 6, 7, 8, 6, log_zero), DomainError);
}

TEST_CASE("contagion totality: the boundary term against a direct evaluation") {
    const std::uint32_t n = 30, c = 27;
    auto visits = round_end_visits(totality_game(n, c, 8, 3));
    auto direct = [&](std::uint32_t d, std::uint32_t dh) {
        oracle::big total = 0;
        for (std::uint32_t g = 0; g <= c; ++g) {
            const oracle::big w = visits.visits[g] + (g == 0 ? 1.0 : 0.0);
            const auto lo = oracle::binom_tail(d, oracle::big(g) / n, dh);
            const auto hi = oracle::binom_tail(d, oracle::big(g + n - c) / n, dh);
            const oracle::big alpha = 1 - pow(lo, c) - pow(1 - hi, c);
            if (alpha > 0) total += w * alpha;
        }
        return total;
    };
    // Vacuous: the sum exceeds one and is capped.
    REQUIRE(direct(10, 6) > 1);
    CHECK(contagion_epsilon_b(visits, n, c, 10, 6) == 0.0);
    const auto tight = direct(40, 30);
    REQUIRE(tight < 1);
    CHECK(contagion_epsilon_b(visits, n, c, 40, 30) == doctest::Approx(oracle::ln(tight)).epsilon(1e-9));
    const std::uint32_t d = 10, dh = 6;

    // One correct process, no Byzantine: nobody can be split off.
    CHECK(contagion_epsilon_b(round_end_visits(totality_game(1, 1, 4, 2)), 1, 1, 4, 2) == log_zero);
    // D_hat = 0: everybody always delivers.
    CHECK(contagion_epsilon_b(visits, n, c, d, 0) == log_zero);
    CHECK_THROWS_AS(contagion_epsilon_b(visits, n, c + 1, d, dh), DomainError);
}

TEST_CASE("combined report") {
    ProtocolParams p;
    p.g = 12;
    p.e = 60;
    p.e_hat = 45;
    p.r = 20;
    p.r_hat = 6;
    p.d = 30;
    p.d_hat = 18;
    auto r = combined_security(200, 0.1, p);
    CHECK(r.c == 180);
    for (double x : {r.eps_pb_totality, r.eps_sieve_validity, r.eps_sieve_consistency, r.eps_pcb_consistency,
                     r.eps_contagion_validity, r.eps_contagion_consistency, r.eps_contagion_totality, r.log_mu})
        CHECK(x <= 0.0);
    CHECK(r.eps_combined >= r.eps_contagion_validity);
    CHECK(r.eps_combined >= r.eps_contagion_consistency);
    CHECK(r.eps_combined >= r.eps_contagion_totality);
    CHECK(r.eps_pcb_consistency >= r.eps_sieve_consistency);
    CHECK(r.eps_pcb_consistency >= r.eps_pb_totality);
    CHECK(std::exp(r.eps_combined) == doctest::Approx(std::min(
                                          1.0, std::exp(r.eps_contagion_validity) + std::exp(r.eps_contagion_consistency) +
                                                   std::exp(r.eps_contagion_totality))));
    // Validity chain, evaluated independently in 50 digits.
    {
        const unsigned c = 180;
        const double pl = gossip_link_probability(200, p.g);
        oracle::big pb = 0;
        for (unsigned k = 1; k <= c / 2; ++k) pb += oracle::choose(c, k) * pow(1 - oracle::big(pl), k * (c - k));
        const auto eo = oracle::binom_tail(p.e, oracle::big(0.1), int(p.e - p.e_hat + 1));
        const oracle::big sv = pb + (1 - pb) * (1 - pow(1 - eo, c));
        const auto dov = oracle::binom_tail(p.d, oracle::big(0.1), int(p.d - p.d_hat + 1));
        const oracle::big cv = sv + (1 - sv) * dov;
        CHECK(r.eps_pb_totality == doctest::Approx(oracle::ln(pb)).epsilon(1e-9));
        CHECK(r.eps_sieve_validity == doctest::Approx(oracle::ln(sv)).epsilon(1e-9));
        CHECK(r.eps_contagion_validity == doctest::Approx(oracle::ln(cv)).epsilon(1e-9));
    }
    // Precomputed gammas give the same report.
    auto g = contagion_gammas(200, 180, p.r, p.r_hat);
    auto again = combined_security(200, 0.1, p, &g);
    CHECK(again.eps_combined == r.eps_combined);

    ProtocolParams weak = p;
    weak.g = 0;
    CHECK(combined_security(200, 0.1, weak).eps_combined == 0.0);
}

TEST_CASE("bounds shrink along the sample-size axes") {
    double prev = 1;
    for (double g : {2.0, 4.0, 8.0, 16.0}) {
        double b = murmur_totality_bound(500, gossip_link_probability(550, g));
        CHECK(b <= prev);
        prev = b;
    }
    prev = 1;
    for (std::uint32_t d : {10u, 20u, 40u}) {
        double b = contagion_validity_bound(d, d * 6 / 10, 0.1, log_zero);
        CHECK(b <= prev);
        prev = b;
    }
}

TEST_CASE("report json") {
    auto r = combined_security(100, 0.0, default_params());
    std::stringstream ss;
    write_json(ss, r);
    auto s = ss.str();
    for (auto key : {"\"params\"", "\"eps\"", "\"latency\"", "\"combined\"", "\"sieve_validity\""})
        CHECK(s.find(key) != std::string::npos);
}
