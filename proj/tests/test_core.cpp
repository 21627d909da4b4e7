#include "pbcast/core.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace pbcast;

TEST_CASE("sample_with_replacement edge cases") {
    Rng rng(1);
    CHECK(sample_with_replacement(1, 3, rng) == std::vector<ProcessId>{0, 0, 0});
    CHECK(sample_with_replacement(10, 0, rng).empty());
    CHECK_THROWS_AS(sample_with_replacement(0, 2, rng), ConfigError);
}

// Recorded from the generator (mt19937_64 behind libstdc++ distributions).
TEST_CASE("golden draws") {
    Rng a(42);
    CHECK(sample_with_replacement(4, 2, a) == std::vector<ProcessId>{0, 3});
    Rng b(42);
    CHECK(sample_poisson_distinct(100, 3.0, b) == std::vector<ProcessId>{39, 62, 69});
    Rng c(1);
    CHECK(c() == 9822250072823399003ULL);
    CHECK(c.split(3)() == 10707934238374818816ULL);
}

TEST_CASE("split streams are reproducible and independent of draw order") {
    Rng master(99);
    Rng x1 = master.split(5);
    master();
    Rng x2 = Rng(99).split(5);
    for (int i = 0; i < 10; ++i) CHECK(x1() == x2());
    CHECK(Rng(99).split(5)() != Rng(99).split(6)());
}

TEST_CASE("sample_with_replacement is uniform within 5 sigma") {
    Rng rng(7);
    const std::uint32_t u = 10, draws = 100000;
    std::vector<int> hits(u, 0);
    for (auto p : sample_with_replacement(u, draws, rng)) ++hits[p];
    const double mean = double(draws) / u, sd = std::sqrt(draws * 0.1 * 0.9);
    for (int h : hits) CHECK(std::abs(h - mean) <= 5 * sd);
}

TEST_CASE("sample_poisson_distinct") {
    Rng rng(3);
    CHECK(sample_poisson_distinct(50, 0.0, rng).empty());
    for (int i = 0; i < 20; ++i) {
        auto s = sample_poisson_distinct(1, 5.0, rng);
        CHECK(s.size() <= 1);
        if (!s.empty()) CHECK(s[0] == 0);
    }
    double total = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
        auto s = sample_poisson_distinct(1000, 3.0, rng);
        CHECK(std::set<ProcessId>(s.begin(), s.end()).size() == s.size());
        total += double(s.size());
    }
    CHECK(std::abs(total / trials - 3.0) <= 3 * std::sqrt(3.0 / trials));
}

TEST_CASE("signatures round-trip and reject forgeries") {
    Authority auth(11);
    auto s = auth.sign(3, 7);
    CHECK(auth.verify(s));
    CHECK(auth.verify(3, s));
    CHECK_FALSE(auth.verify(4, s));
    CHECK_FALSE(auth.verify(SignedPayload{3, 8, s.tag}));
    CHECK_FALSE(auth.verify(SignedPayload{2, 7, s.tag}));
    CHECK_FALSE(Authority(12).verify(s));
}

TEST_CASE("system config") {
    auto c = make_config(10, 0.25);
    CHECK(c.byzantine_count == 2);
    CHECK(c.correct_count() == 8);
    CHECK(c.is_byzantine(9));
    CHECK_FALSE(c.is_byzantine(7));
    CHECK_THROWS_AS(make_config(0, 0.0), ConfigError);
    CHECK_THROWS_AS(make_config(10, 1.0), ConfigError);
}

TEST_CASE("protocol params validation") {
    CHECK_NOTHROW(default_params().validate());
    ProtocolParams p = default_params();
    p.e_hat = p.e + 1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = default_params();
    p.r_hat = 10;
    p.d_hat = 10;  // equal ratios
    CHECK_THROWS_AS(p.validate(), ConfigError);
}
