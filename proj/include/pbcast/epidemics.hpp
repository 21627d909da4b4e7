#pragma once

#include "pbcast/core.hpp"

#include <functional>
#include <iosfwd>
#include <limits>

namespace pbcast {

struct GameParams {
    std::uint32_t n = 1;
    std::uint32_t r = 0;
    double l = 1.0;  // probability that a predecessor slot is linked
    std::uint32_t k = 1;
    std::uint32_t s = 0;
    std::uint32_t r_hat = 0;

    // Throws ConfigError unless n >= 1, s <= n and l lies in [0,1].
    void validate() const;
};

struct Multigraph {
    static constexpr std::uint32_t missing = std::numeric_limits<std::uint32_t>::max();

    std::uint32_t n = 0;
    std::vector<std::vector<std::uint32_t>> predecessors;  // n rows of r slots
};

Multigraph random_multigraph(const GameParams& params, Rng& rng);

struct EpidemicState {
    Multigraph graph;
    std::vector<bool> infected;

    std::uint32_t infected_count() const;
};

// Iterates the contagion step to its fixed point.
EpidemicState epidemic_run(EpidemicState state, std::uint32_t r_hat);

// Picks s distinct healthy nodes from the infection history alone.
using InfectionPolicy = std::function<std::vector<std::uint32_t>(const std::vector<bool>& infected, std::uint32_t s, Rng& rng)>;

InfectionPolicy uniform_policy();
InfectionPolicy lowest_id_policy();
// Alternates between the top and the bottom of the healthy id range.
InfectionPolicy zigzag_policy();

// Infection count at the end of each of the k rounds. A policy that returns
// an infected, duplicate or out-of-range node raises ExecutionFailure.
std::vector<std::uint32_t> play_threshold_contagion_rounds(const GameParams& params, const InfectionPolicy& policy,
                                                           Rng& rng);
std::uint32_t play_threshold_contagion(const GameParams& params, const InfectionPolicy& policy, Rng& rng);

// Per-round empirical pmfs of the infection count, linear space.
std::vector<std::vector<double>> monte_carlo_gamma(const GameParams& params, const InfectionPolicy& policy,
                                                   std::uint64_t trials, std::uint64_t seed);

// Probability that one healthy node is infected in the next contagion step
// given n infected nodes of which the last u were infected in the previous step.
double infection_probability(std::uint32_t n, std::uint32_t u, const GameParams& params);

// Linear pmf over u' = 0..N-n; the successor state is (n + u', u').
std::vector<double> markov_contagion_transition(std::uint32_t n, std::uint32_t u, const GameParams& params);

struct JointPmf {
    std::uint32_t n = 0;
    std::vector<double> p;  // (n_bar, u_bar) at n_bar * (n + 1) + u_bar, linear

    double at(std::uint32_t n_bar, std::uint32_t u_bar) const { return p[std::size_t(n_bar) * (n + 1) + u_bar]; }
};

// Player step applied to an end-of-round pmf over 0..N.
JointPmf round_start_transition(const std::vector<double>& pmf, const GameParams& params);

struct GammaDistribution {
    GameParams params;
    std::vector<std::vector<double>> rounds;  // log pmf over 0..N at the end of rounds 1..K
    // Total probability dropped by pruning, linear.
    double pruned_mass = 0.0;
};

// Pruning drops any single transition output whose mass is below `prune`.
GammaDistribution gamma_distribution(const GameParams& params, double prune = 1e-300);

struct RoundVisits {
    std::vector<double> visits;  // expected number of rounds 1..K ending at g, linear
    double pruned_mass = 0.0;
};

// Sum over rounds of the per-round end pmfs, from one pass over the chain.
// Requires s == 1 and k >= n, so every path reaches N within the horizon.
RoundVisits round_end_visits(const GameParams& params, double prune = 1e-300);

void write_json(std::ostream& os, const GammaDistribution& g);

}  // namespace pbcast
