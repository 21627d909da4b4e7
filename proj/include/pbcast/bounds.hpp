#pragma once

#include "pbcast/core.hpp"
#include "pbcast/epidemics.hpp"

#include <iosfwd>

namespace pbcast {

// All bounds return natural-log probabilities capped at 0.

// Probability that two correct processes are gossip neighbours.
double gossip_link_probability(std::uint32_t n, double g);

double murmur_totality_bound(std::uint32_t c, double p);

// Expected delivery latency in message delays. Throws DomainError unless
// (2 - 2f) * G > 1.
double murmur_latency(std::uint32_t c, double f, double g);

double sieve_total_validity_bound(std::uint32_t c, double f, std::uint32_t e, std::uint32_t e_hat, double log_eps_pb_t);

// Probability that some correct process holds at least E_hat Byzantine slots.
double sieve_poisoned_probability(std::uint32_t c, double f, std::uint32_t e, std::uint32_t e_hat);

struct SieveConsistencyDetail {
    double log_eps_p = 0;
    double log_eps_c = 0;
    // Indexed by the first-phase delivery count L = 0..C, linear space.
    std::vector<double> psi_tilde;
    std::vector<double> phi_tilde;
};

SieveConsistencyDetail sieve_consistency_detail(std::uint32_t c, double f, std::uint32_t e, std::uint32_t e_hat);
double sieve_consistency_bound(std::uint32_t c, double f, std::uint32_t e, std::uint32_t e_hat);

double contagion_validity_bound(std::uint32_t d, std::uint32_t d_hat, double f, double log_eps_pcb_v);

// Game whose final infection size dominates the correct processes that
// receive enough Ready support once every Byzantine process is ready.
GameParams consistency_game(std::uint32_t n, std::uint32_t c, std::uint32_t r, std::uint32_t r_hat);
// Game played by the correct processes alone, one pcb delivery per round.
GameParams totality_game(std::uint32_t n, std::uint32_t c, std::uint32_t r, std::uint32_t r_hat);

// Pruned gamma mass is charged as if it always led to a violation.
double contagion_mu(const GammaDistribution& gamma_plus, std::uint32_t n, std::uint32_t c, std::uint32_t d,
                    std::uint32_t d_hat);
double contagion_epsilon_b(const RoundVisits& gamma_minus, std::uint32_t n, std::uint32_t c, std::uint32_t d,
                           std::uint32_t d_hat);

struct ContagionConsistency {
    double log_eps_c = 0;
    double log_mu = 0;
};

ContagionConsistency contagion_consistency_bound(std::uint32_t n, std::uint32_t c, std::uint32_t r, std::uint32_t r_hat,
                                                 std::uint32_t d, std::uint32_t d_hat, double log_eps_pcb_c);
double contagion_totality_bound(std::uint32_t n, std::uint32_t c, std::uint32_t r, std::uint32_t r_hat,
                                std::uint32_t d, std::uint32_t d_hat, double log_eps_pcb_c, double log_mu);

// Prune threshold for gamma distributions feeding bounds. The pruned mass is
// added to the bound, so it only has to sit well below the target epsilon.
inline constexpr double bound_prune = 1e-40;

struct BoundReport {
    std::uint32_t n = 0;
    std::uint32_t c = 0;
    ProtocolParams params;
    double eps_pb_totality = 0;
    double eps_sieve_validity = 0;
    double eps_sieve_consistency = 0;  // conditional on pb totality
    double eps_pcb_consistency = 0;    // union with pb totality; what Contagion consumes
    double eps_contagion_validity = 0;
    double eps_contagion_consistency = 0;
    double eps_contagion_totality = 0;
    double log_mu = 0;
    double eps_combined = 0;
    double latency_estimate = 0;  // NaN when the closed form does not apply
};

// The two contagion distributions depend on (N, C, R, R_hat) only, so
// searches over D and D_hat can share them.
struct ContagionGammas {
    GammaDistribution plus;
    RoundVisits minus;
};

ContagionGammas contagion_gammas(std::uint32_t n, std::uint32_t c, std::uint32_t r, std::uint32_t r_hat);

BoundReport combined_security(std::uint32_t n, double f, const ProtocolParams& params,
                              const ContagionGammas* gammas = nullptr);

// The same composition with the Sieve consistency term supplied by the caller.
BoundReport compose_report(std::uint32_t n, double f, const ProtocolParams& params, double log_sieve_consistency,
                           const ContagionGammas& gammas);

void write_json(std::ostream& os, const BoundReport& r);

}  // namespace pbcast
