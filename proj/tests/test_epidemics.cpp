#include "oracles.hpp"
#include "pbcast/epidemics.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace pbcast;

namespace {

GameParams game(std::uint32_t n, std::uint32_t r, double l, std::uint32_t k, std::uint32_t s, std::uint32_t r_hat) {
    GameParams g;
    g.n = n;
    g.r = r;
    g.l = l;
    g.k = k;
    g.s = s;
    g.r_hat = r_hat;
    return g;
}

Multigraph graph(std::vector<std::vector<std::uint32_t>> preds) {
    Multigraph g;
    g.n = static_cast<std::uint32_t>(preds.size());
    g.predecessors = std::move(preds);
    return g;
}

double pmf_sum(const std::vector<double>& logp) {
    double s = 0;
    for (double x : logp) s += std::exp(x);
    return s;
}

}  // namespace

TEST_CASE("random multigraph") {
    Rng rng(7);
    auto none = random_multigraph(game(5, 3, 0.0, 1, 1, 1), rng);
    for (const auto& row : none.predecessors)
        for (auto x : row) CHECK(x == Multigraph::missing);
    auto self = random_multigraph(game(1, 4, 1.0, 1, 1, 1), rng);
    CHECK(self.predecessors[0] == std::vector<std::uint32_t>{0, 0, 0, 0});

    Rng golden(7);
    auto g = random_multigraph(game(5, 3, 0.5, 1, 1, 1), golden);
    const auto m = Multigraph::missing;
    CHECK(g.predecessors == std::vector<std::vector<std::uint32_t>>{{m, m, 4}, {2, m, m}, {m, 2, m}, {2, m, m}, {2, 0, m}});
    CHECK_THROWS_AS(random_multigraph(game(3, 1, 1.5, 1, 1, 1), rng), ConfigError);
}

TEST_CASE("epidemic_run") {
    const auto m = Multigraph::missing;
    EpidemicState st{graph({{m}, {m}, {m}}), {false, false, false}};
    CHECK(epidemic_run(st, 0).infected_count() == 3);

    // Node 2 has two infected predecessors.
    EpidemicState two{graph({{m, m}, {m, m}, {0, 1}, {0, 2}}), {true, true, false, false}};
    auto out = epidemic_run(two, 2);
    CHECK(out.infected[2]);
    CHECK(out.infected[3]);  // then 3 sees 0 and 2

    EpidemicState cycle{graph({{2}, {0}, {1}}), {true, false, false}};
    CHECK(epidemic_run(cycle, 1).infected_count() == 3);

    // Multiplicity counts.
    EpidemicState twice{graph({{m, m}, {0, 0}}), {true, false}};
    CHECK(epidemic_run(twice, 2).infected_count() == 2);
}

TEST_CASE("threshold contagion game without contagion") {
    Rng rng(1);
    // r_hat > r: only the player infects. Once fewer than S nodes are healthy
    // the player stops.
    CHECK(play_threshold_contagion(game(10, 2, 1.0, 3, 3, 3), lowest_id_policy(), rng) == 9);
    CHECK(play_threshold_contagion(game(10, 2, 1.0, 4, 3, 3), lowest_id_policy(), rng) == 9);
    CHECK(play_threshold_contagion(game(10, 2, 1.0, 5, 2, 3), uniform_policy(), rng) == 10);
    CHECK(play_threshold_contagion(game(10, 4, 0.0, 3, 3, 1), zigzag_policy(), rng) == 9);
    auto rounds = play_threshold_contagion_rounds(game(10, 4, 0.0, 3, 3, 1), zigzag_policy(), rng);
    CHECK(rounds == std::vector<std::uint32_t>{3, 6, 9});
}

TEST_CASE("uniform policy on a small dense graph often infects everyone") {
    Rng rng(5);
    int full = 0;
    const int trials = 2000;
    for (int i = 0; i < trials; ++i) full += play_threshold_contagion(game(11, 3, 1.0, 1, 3, 2), uniform_policy(), rng) == 11;
    CHECK(full > trials / 10);
}

TEST_CASE("bad policies are rejected") {
    Rng rng(1);
    InfectionPolicy dup = [](const std::vector<bool>&, std::uint32_t s, Rng&) { return std::vector<std::uint32_t>(s, 0); };
    CHECK_THROWS_AS(play_threshold_contagion(game(5, 1, 1.0, 1, 2, 1), dup, rng), ExecutionFailure);
    InfectionPolicy again = [](const std::vector<bool>&, std::uint32_t, Rng&) { return std::vector<std::uint32_t>{0}; };
    CHECK_THROWS_AS(play_threshold_contagion(game(5, 1, 0.0, 2, 1, 2), again, rng), ExecutionFailure);
    InfectionPolicy outside = [](const std::vector<bool>&, std::uint32_t, Rng&) { return std::vector<std::uint32_t>{9}; };
    CHECK_THROWS_AS(play_threshold_contagion(game(5, 1, 1.0, 1, 1, 1), outside, rng), ExecutionFailure);
    InfectionPolicy short_pick = [](const std::vector<bool>&, std::uint32_t, Rng&) { return std::vector<std::uint32_t>{}; };
    CHECK_THROWS_AS(play_threshold_contagion(game(5, 1, 1.0, 1, 1, 1), short_pick, rng), ExecutionFailure);
}

TEST_CASE("infection probability matches the merged-binomial form") {
    // Staying healthy through n - u infected and then through n infected:
    // p = 1 - F(n) / F(n - u) with F(j) = P[Bin(R, l j / N) < R_hat].
    for (std::uint32_t big_n : {6u, 30u})
        for (std::uint32_t r : {1u, 3u, 6u})
            for (double l : {0.3, 1.0})
                for (std::uint32_t rh = 1; rh <= r; ++rh)
                    for (std::uint32_t n = 1; n < big_n; n += 2)
                        for (std::uint32_t u = 1; u <= n; u += 2) {
                            auto g = game(big_n, r, l, 1, 1, rh);
                            auto f = [&](std::uint32_t j) {
                                return 1 - oracle::binom_tail(r, oracle::big(l) * j / big_n, int(rh));
                            };
                            const double expect = static_cast<double>(1 - f(n) / f(n - u));
                            CHECK(infection_probability(n, u, g) == doctest::Approx(expect).epsilon(1e-10));
                        }
}

TEST_CASE("markov transition edge cases") {
    auto g = game(6, 2, 1.0, 1, 1, 1);
    CHECK(markov_contagion_transition(3, 0, g) == std::vector<double>{1.0});
    CHECK(markov_contagion_transition(6, 2, g) == std::vector<double>{1.0});
    auto pmf = markov_contagion_transition(2, 2, g);
    CHECK(pmf.size() == 5);
    double s = 0;
    for (double x : pmf) s += x;
    CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("markov transition matches conditioned simulation") {
    // (N=6, R=2, l=1, R_hat=1) from (2, 2), then the second step conditioned
    // on the first having infected exactly one node.
    auto g = game(6, 2, 1.0, 1, 2, 1);
    const auto first = markov_contagion_transition(2, 2, g);
    const auto second = markov_contagion_transition(3, 1, g);
    std::vector<double> hist1(5, 0.0), hist2(4, 0.0);
    Rng rng(11);
    const int trials = 200000;
    int cond = 0;
    for (int t = 0; t < trials; ++t) {
        auto mg = random_multigraph(g, rng);
        std::vector<bool> inf{true, true, false, false, false, false};
        auto step = [&](const std::vector<bool>& cur) {
            auto next = cur;
            for (std::uint32_t v = 0; v < 6; ++v) {
                if (cur[v]) continue;
                std::uint32_t c = 0;
                for (auto p : mg.predecessors[v]) c += p != Multigraph::missing && cur[p];
                if (c >= 1) next[v] = true;
            }
            return next;
        };
        auto count = [](const std::vector<bool>& v) { return std::uint32_t(std::count(v.begin(), v.end(), true)); };
        auto one = step(inf);
        const auto du = count(one) - 2;
        hist1[du] += 1;
        if (du == 1) {
            ++cond;
            hist2[count(step(one)) - 3] += 1;
        }
    }
    for (auto& x : hist1) x /= trials;
    for (auto& x : hist2) x /= cond;
    CHECK(oracle::total_variation(first, hist1) <= 0.01);
    CHECK(oracle::total_variation(second, hist2) <= 0.01);
}

TEST_CASE("round start transition") {
    auto g = game(5, 1, 1.0, 1, 2, 1);
    std::vector<double> zero{1, 0, 0, 0, 0, 0};
    auto a = round_start_transition(zero, g);
    CHECK(a.at(2, 2) == 1.0);
    std::vector<double> full{0, 0, 0, 0, 0, 1};
    CHECK(round_start_transition(full, g).at(5, 0) == 1.0);
    // Worked by hand: 0 -> (2, 2); 4 has one healthy node left so stays (4, 0).
    std::vector<double> mixed{0.2, 0, 0, 0, 0.5, 0.3};
    auto m = round_start_transition(mixed, g);
    CHECK(m.at(2, 2) == doctest::Approx(0.2));
    CHECK(m.at(4, 0) == doctest::Approx(0.5));
    CHECK(m.at(5, 0) == doctest::Approx(0.3));
    CHECK_THROWS_AS(round_start_transition({1.0}, g), ConfigError);
}

TEST_CASE("gamma distribution degenerate cases") {
    auto all = gamma_distribution(game(7, 3, 0.5, 2, 1, 0));
    CHECK(std::exp(all.rounds[0][7]) == doctest::Approx(1.0));
    auto none = gamma_distribution(game(10, 3, 0.0, 4, 3, 1));
    CHECK(std::exp(none.rounds[0][3]) == doctest::Approx(1.0));
    CHECK(std::exp(none.rounds[2][9]) == doctest::Approx(1.0));
    CHECK(std::exp(none.rounds[3][9]) == doctest::Approx(1.0));
}

TEST_CASE("gamma distribution equals exhaustive enumeration on tiny games") {
    for (std::uint32_t n = 1; n <= 3; ++n)
        for (std::uint32_t r = 0; r <= 2; ++r)
            for (double l : {0.5, 1.0})
                for (std::uint32_t k = 1; k <= 2; ++k)
                    for (std::uint32_t s = 1; s <= n; ++s)
                        for (std::uint32_t rh = 0; rh <= r + 1; ++rh) {
                            auto g = game(n, r, l, k, s, rh);
                            auto exact = oracle::enumerate_gamma(g);
                            auto gamma = gamma_distribution(g);
                            for (std::uint32_t i = 0; i < k; ++i)
                                CHECK(oracle::total_variation(oracle::linear(gamma.rounds[i]), exact[i]) <= 1e-9);
                        }
}

TEST_CASE("gamma pmfs are normalized and stochastically ordered") {
    auto g = gamma_distribution(game(40, 5, 0.8, 4, 2, 2));
    CHECK(g.pruned_mass <= 1e-250);
    for (std::size_t r = 0; r < g.rounds.size(); ++r) {
        CHECK(pmf_sum(g.rounds[r]) == doctest::Approx(1.0).epsilon(1e-9));
        if (r == 0) continue;
        double a = 0, b = 0;
        for (std::size_t x = 0; x < g.rounds[r].size(); ++x) {
            a += std::exp(g.rounds[r - 1][x]);
            b += std::exp(g.rounds[r][x]);
            CHECK(b <= a + 1e-12);
        }
    }
}

TEST_CASE("pruning accounts for dropped mass") {
    auto g = game(200, 6, 0.7, 3, 2, 2);
    auto exact = gamma_distribution(g);
    auto pruned = gamma_distribution(g, 1e-12);
    double diff = 0;
    for (std::size_t x = 0; x <= 200; ++x) diff += std::abs(std::exp(exact.rounds[2][x]) - std::exp(pruned.rounds[2][x]));
    CHECK(pruned.pruned_mass > 0);
    CHECK(diff <= pruned.pruned_mass * 1.000001 + 1e-15);
}

TEST_CASE("round_end_visits sums the per-round distributions") {
    for (std::uint32_t n : {1u, 5u, 24u}) {
        auto g = game(n, 4, 0.9, n, 1, 2);
        auto v = round_end_visits(g);
        auto gamma = gamma_distribution(g);
        for (std::uint32_t x = 0; x <= n; ++x) {
            double s = 0;
            for (const auto& r : gamma.rounds) s += std::exp(r[x]);
            CHECK(v.visits[x] == doctest::Approx(s).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(round_end_visits(game(5, 2, 1.0, 5, 2, 1)), ConfigError);
    CHECK_THROWS_AS(round_end_visits(game(5, 2, 1.0, 4, 1, 1)), ConfigError);
}

TEST_CASE("gamma matches Monte Carlo and does not depend on the policy") {
    auto g = game(12, 3, 0.8, 2, 2, 2);
    auto gamma = gamma_distribution(g);
    auto a = monte_carlo_gamma(g, uniform_policy(), 20000, 1);
    auto b = monte_carlo_gamma(g, zigzag_policy(), 20000, 2);
    for (std::uint32_t r = 0; r < 2; ++r) {
        CHECK(oracle::total_variation(oracle::linear(gamma.rounds[r]), a[r]) <= 0.03);
        CHECK(oracle::total_variation(a[r], b[r]) <= 0.03);
    }
}

TEST_CASE("gamma json") {
    std::stringstream ss;
    write_json(ss, gamma_distribution(game(3, 1, 1.0, 1, 1, 0)));
    auto s = ss.str();
    CHECK(s.find("\"rounds\"") != std::string::npos);
    CHECK(s.find("\"params\"") != std::string::npos);
    CHECK(s.find("null") != std::string::npos);
}
