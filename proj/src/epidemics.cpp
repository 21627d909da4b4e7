#include "pbcast/epidemics.hpp"

#include "pbcast/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <ostream>

namespace pbcast {

void GameParams::validate() const {
    if (n == 0) throw ConfigError("game needs at least one node");
    if (s > n) throw ConfigError("infection batch exceeds the node count");
    if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("link probability outside [0,1]");
}

Multigraph random_multigraph(const GameParams& params, Rng& rng) {
    params.validate();
    Multigraph g;
    g.n = params.n;
    g.predecessors.assign(params.n, std::vector<std::uint32_t>(params.r, Multigraph::missing));
    for (auto& row : g.predecessors)
        for (auto& slot : row)
            if (rng.bernoulli(params.l)) slot = rng.uniform(params.n);
    return g;
}

std::uint32_t EpidemicState::infected_count() const {
    return static_cast<std::uint32_t>(std::count(infected.begin(), infected.end(), true));
}

namespace {

// Incremental form of the contagion step: counts[j] is the number of infected
// predecessor slots of j, and infecting a node bumps each of its successors.
class Spreader {
public:
    Spreader(const Multigraph& g, std::uint32_t r_hat) : r_hat_(r_hat), successors_(g.n), counts_(g.n, 0) {
        for (std::uint32_t j = 0; j < g.n; ++j)
            for (auto p : g.predecessors[j])
                if (p != Multigraph::missing) successors_[p].push_back(j);
    }

    void infect(std::vector<bool>& infected, std::uint32_t v) {
        infected[v] = true;
        frontier_.push_back(v);
    }

    void settle(std::vector<bool>& infected) {
        for (std::uint32_t j = 0; j < infected.size(); ++j)
            if (!infected[j] && counts_[j] >= r_hat_) infect(infected, j);
        while (!frontier_.empty()) {
            auto v = frontier_.back();
            frontier_.pop_back();
            for (auto j : successors_[v])
                if (++counts_[j] >= r_hat_ && !infected[j]) infect(infected, j);
        }
    }

    void seed(const std::vector<bool>& infected) {
        for (std::uint32_t v = 0; v < infected.size(); ++v)
            if (infected[v])
                for (auto j : successors_[v]) ++counts_[j];
    }

private:
    std::uint32_t r_hat_;
    std::vector<std::vector<std::uint32_t>> successors_;
    std::vector<std::uint32_t> counts_;
    std::vector<std::uint32_t> frontier_;
};

std::vector<std::uint32_t> healthy_nodes(const std::vector<bool>& infected) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t v = 0; v < infected.size(); ++v)
        if (!infected[v]) out.push_back(v);
    return out;
}

}  // namespace

EpidemicState epidemic_run(EpidemicState state, std::uint32_t r_hat) {
    state.infected.resize(state.graph.n, false);
    Spreader sp(state.graph, r_hat);
    sp.seed(state.infected);
    sp.settle(state.infected);
    return state;
}

InfectionPolicy uniform_policy() {
    return [](const std::vector<bool>& infected, std::uint32_t s, Rng& rng) {
        auto h = healthy_nodes(infected);
        for (std::uint32_t i = 0; i < s; ++i)
            std::swap(h[i], h[i + rng.uniform(static_cast<std::uint32_t>(h.size()) - i)]);
        h.resize(s);
        return h;
    };
}

InfectionPolicy lowest_id_policy() {
    return [](const std::vector<bool>& infected, std::uint32_t s, Rng&) {
        auto h = healthy_nodes(infected);
        h.resize(s);
        return h;
    };
}

InfectionPolicy zigzag_policy() {
    return [](const std::vector<bool>& infected, std::uint32_t s, Rng&) {
        auto h = healthy_nodes(infected);
        std::vector<std::uint32_t> out;
        std::size_t lo = 0, hi = h.size();
        while (out.size() < s) out.push_back(out.size() % 2 == 0 ? h[--hi] : h[lo++]);
        return out;
    };
}

std::vector<std::uint32_t> play_threshold_contagion_rounds(const GameParams& params, const InfectionPolicy& policy,
                                                           Rng& rng) {
    auto g = random_multigraph(params, rng);
    std::vector<bool> infected(params.n, false);
    Spreader sp(g, params.r_hat);
    std::vector<std::uint32_t> out;
    std::uint32_t count = 0;
    for (std::uint32_t round = 0; round < params.k; ++round) {
        if (params.n - count >= params.s) {
            auto pick = policy(infected, params.s, rng);
            if (pick.size() != params.s) throw ExecutionFailure("policy returned the wrong number of nodes");
            for (auto v : pick) {
                if (v >= params.n || infected[v]) throw ExecutionFailure("policy picked an infected or unknown node");
                sp.infect(infected, v);
            }
        }
        sp.settle(infected);
        count = static_cast<std::uint32_t>(std::count(infected.begin(), infected.end(), true));
        out.push_back(count);
    }
    return out;
}

std::uint32_t play_threshold_contagion(const GameParams& params, const InfectionPolicy& policy, Rng& rng) {
    auto rounds = play_threshold_contagion_rounds(params, policy, rng);
    return rounds.empty() ? 0 : rounds.back();
}

std::vector<std::vector<double>> monte_carlo_gamma(const GameParams& params, const InfectionPolicy& policy,
                                                   std::uint64_t trials, std::uint64_t seed) {
    std::vector<std::vector<double>> pmf(params.k, std::vector<double>(params.n + 1, 0.0));
    Rng master(seed);
    for (std::uint64_t t = 0; t < trials; ++t) {
        Rng rng = master.split(t);
        auto rounds = play_threshold_contagion_rounds(params, policy, rng);
        for (std::size_t r = 0; r < rounds.size(); ++r) pmf[r][rounds[r]] += 1.0;
    }
    for (auto& row : pmf)
        for (auto& x : row) x /= double(trials);
    return pmf;
}

double infection_probability(std::uint32_t n, std::uint32_t u, const GameParams& params) {
    if (params.r_hat == 0) return 1.0;
    if (u == 0 || params.r_hat > params.r || n >= params.n) return 0.0;
    const double big_n = params.n;
    const double a = params.l * double(n - u) / big_n;
    const double q = std::min(1.0, params.l * double(u) / big_n / (1.0 - a));
    // Infected predecessors among the already-known ones, given the node
    // stayed healthy so far: Bin(R, a) truncated below R_hat.
    const double log_norm = log_binom_cdf(params.r, a, std::int64_t(params.r_hat) - 1);
    std::vector<double> terms;
    for (std::uint32_t v = 0; v < params.r_hat; ++v)
        terms.push_back(log_binom_pmf(params.r, a, v) + log_binom_tail(params.r - v, q, std::int64_t(params.r_hat - v)));
    return std::min(1.0, std::exp(log_sum_exp(terms) - log_norm));
}

std::vector<double> markov_contagion_transition(std::uint32_t n, std::uint32_t u, const GameParams& params) {
    if (n >= params.n || u == 0) return {1.0};
    return binom_pmf(params.n - n, infection_probability(n, u, params));
}

JointPmf round_start_transition(const std::vector<double>& pmf, const GameParams& params) {
    if (pmf.size() != params.n + 1) throw ConfigError("pmf length must be N + 1");
    JointPmf out;
    out.n = params.n;
    out.p.assign(std::size_t(params.n + 1) * (params.n + 1), 0.0);
    for (std::uint32_t n = 0; n <= params.n; ++n) {
        if (pmf[n] == 0.0) continue;
        if (n + params.s <= params.n)
            out.p[std::size_t(n + params.s) * (params.n + 1) + params.s] += pmf[n];
        else
            out.p[std::size_t(n) * (params.n + 1)] += pmf[n];
    }
    return out;
}

namespace {

// Spreads `mass` over Bin(m, p) outcomes, walking out from the mode and
// stopping once an outcome carries less than `prune`. Returns an upper bound
// on the mass left out; past the mode the pmf ratios shrink, so each cut tail
// is dominated by a geometric series.
template <class Sink>
double spread_binomial(std::uint32_t m, double p, double mass, double prune, Sink&& sink) {
    if (p <= 0.0 || m == 0) {
        sink(0, mass);
        return 0.0;
    }
    if (p >= 1.0) {
        sink(m, mass);
        return 0.0;
    }
    auto mode = static_cast<std::uint32_t>(std::min<double>(m, std::floor((m + 1) * p)));
    const double odds = p / (1.0 - p);
    const double at_mode = std::exp(log_binom_pmf(m, p, mode));
    if (mass * at_mode < prune) return mass;
    auto tail = [](double w, double ratio, double terms) { return ratio < 1.0 ? std::min(w / (1.0 - ratio), w * terms) : w * terms; };
    double lost = 0.0;
    double w = at_mode;
    for (std::uint32_t k = mode;;) {
        sink(k, mass * w);
        if (k == m) break;
        w *= double(m - k) / double(k + 1) * odds;
        ++k;
        if (mass * w < prune) {
            lost += tail(w, double(m - k) / double(k + 1) * odds, m - k + 1);
            break;
        }
    }
    w = at_mode;
    for (std::uint32_t k = mode; k > 0;) {
        w *= double(k) / double(m - k + 1) / odds;
        --k;
        if (mass * w < prune) {
            lost += tail(w, k == 0 ? 0.0 : double(k) / double(m - k + 1) / odds, k + 1);
            break;
        }
        sink(k, mass * w);
    }
    return std::min(mass, mass * lost);
}

}  // namespace

namespace {

// Mass over contagion-step states (n, u) with u > 0. Every transition strictly
// raises n, so one ascending sweep over n runs the chain to absorption.
class ContagionChain {
public:
    ContagionChain(const GameParams& params, double prune)
        : params_(params), prune_(prune), side_(params.n + 1), log_f_(side_), grid_(side_ * side_, 0.0), row_hi_(side_, 0) {
        params.validate();
        // A healthy node with R slots over l*j/N infected mass stays healthy
        // with probability F(j). Conditioning on having stayed healthy at
        // n - u and merging the two binomials gives p(n, u) = 1 - F(n) / F(n - u).
        for (std::uint32_t j = 0; j <= params.n; ++j)
            log_f_[j] = log_binom_cdf(params.r, params.l * double(j) / params.n, std::int64_t(params.r_hat) - 1);
    }

    double pruned_mass() const { return pruned_; }

    void add(std::uint32_t n, std::uint32_t u, double mass) {
        grid_[std::size_t(n) * side_ + u] += mass;
        row_hi_[n] = std::max(row_hi_[n], u);
    }

    // Runs rows from..N. After row n is done, on_absorbed(n, mass) receives the
    // mass that came to rest at (n, 0); it may add() to later rows.
    template <class F>
    void sweep(std::uint32_t from, F&& on_absorbed) {
        const std::uint32_t big_n = params_.n;
        for (std::uint32_t n = from; n <= big_n; ++n) {
            double absorbed = 0.0;
            double* row = &grid_[std::size_t(n) * side_];
            for (std::uint32_t u = 1; u <= row_hi_[n]; ++u) {
                const double mass = row[u];
                if (mass == 0.0) continue;
                row[u] = 0.0;
                if (n == big_n) {
                    absorbed += mass;
                    continue;
                }
                pruned_ += spread_binomial(big_n - n, p_inf(n, u), mass, prune_, [&](std::uint32_t du, double w) {
                    if (du == 0)
                        absorbed += w;
                    else
                        add(n + du, du, w);
                });
            }
            row_hi_[n] = 0;
            if (absorbed > 0.0) on_absorbed(n, absorbed);
        }
    }

private:
    double p_inf(std::uint32_t n, std::uint32_t u) const {
        if (params_.r_hat == 0) return 1.0;
        if (params_.r_hat > params_.r) return 0.0;
        return std::clamp(-std::expm1(log_f_[n] - log_f_[n - u]), 0.0, 1.0);
    }

    GameParams params_;
    double prune_;
    std::size_t side_;
    std::vector<double> log_f_;
    std::vector<double> grid_;
    std::vector<std::uint32_t> row_hi_;
    double pruned_ = 0.0;
};

}  // namespace

GammaDistribution gamma_distribution(const GameParams& params, double prune) {
    ContagionChain chain(params, prune);
    const std::uint32_t big_n = params.n;
    GammaDistribution out;
    out.params = params;
    std::vector<double> end(big_n + 1, 0.0);
    end[0] = 1.0;
    for (std::uint32_t round = 0; round < params.k; ++round) {
        std::vector<double> next_end(big_n + 1, 0.0);
        std::uint32_t lowest = big_n + 1;
        for (std::uint32_t n = 0; n <= big_n; ++n) {
            if (end[n] == 0.0) continue;
            if (params.s > 0 && n + params.s <= big_n) {
                chain.add(n + params.s, params.s, end[n]);
                lowest = std::min(lowest, n + params.s);
            } else {
                next_end[n] += end[n];
            }
        }
        chain.sweep(lowest, [&](std::uint32_t n, double mass) { next_end[n] += mass; });
        std::vector<double> logs(big_n + 1);
        for (std::size_t i = 0; i <= big_n; ++i) logs[i] = next_end[i] > 0.0 ? std::log(next_end[i]) : log_zero;
        out.rounds.push_back(std::move(logs));
        end = std::move(next_end);
    }
    out.pruned_mass = chain.pruned_mass();
    return out;
}

RoundVisits round_end_visits(const GameParams& params, double prune) {
    if (params.s != 1 || params.k < params.n) throw ConfigError("round visits need s = 1 and k >= n");
    ContagionChain chain(params, prune);
    const std::uint32_t big_n = params.n;
    RoundVisits out;
    out.visits.assign(big_n + 1, 0.0);
    // Round ends strictly below N move on to the next round, one node higher,
    // so the whole game is a single ascending sweep.
    chain.add(1, 1, 1.0);
    chain.sweep(1, [&](std::uint32_t n, double mass) {
        out.visits[n] += mass;
        if (n < big_n) chain.add(n + 1, 1, mass);
    });
    double before = 0.0;
    for (std::uint32_t g = 0; g < big_n; ++g) before += out.visits[g];
    // Every round that does not end below N ends at N.
    out.visits[big_n] = std::max(0.0, double(params.k) - before);
    out.pruned_mass = chain.pruned_mass();
    return out;
}

void write_json(std::ostream& os, const GammaDistribution& g) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& r : g.rounds) {
        nlohmann::json row = nlohmann::json::array();
        for (double x : r) row.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
        rounds.push_back(std::move(row));
    }
    nlohmann::json j{{"params",
                      {{"n", g.params.n},
                       {"r", g.params.r},
                       {"l", g.params.l},
                       {"k", g.params.k},
                       {"s", g.params.s},
                       {"r_hat", g.params.r_hat}}},
                     {"rounds", rounds},
                     {"pruned_mass", g.pruned_mass}};
    os << j.dump(2) << '\n';
}

}  // namespace pbcast
