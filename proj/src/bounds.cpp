#include "pbcast/bounds.hpp"

#include "pbcast/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <ostream>

namespace pbcast {

namespace {

// log(1 - (1 - e^a)^k), with e^a the per-trial probability.
double log_any_of(double log_a, double k) {
    if (k <= 0) return log_zero;
    return log1m_exp(k * log1m_exp(log_a));
}

// log(a + b - ab) for independent events.
double log_union(double log_a, double log_b) { return log1m_exp(log1m_exp(log_a) + log1m_exp(log_b)); }

double log_add(double log_a, double log_b) { return cap_log(log_sum_exp(log_a, log_b)); }

}  // namespace

double gossip_link_probability(std::uint32_t n, double g) {
    const double q = std::clamp(g / n, 0.0, 1.0);
    return 1.0 - (1.0 - q) * (1.0 - q);
}

double murmur_totality_bound(std::uint32_t c, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("link probability outside [0,1]");
    const double log_miss = p >= 1.0 ? log_zero : std::log1p(-p);
    std::vector<double> terms;
    for (std::uint32_t k = 1; k <= c / 2; ++k) {
        const double cut = double(k) * double(c - k);
        terms.push_back(log_choose(c, k) + (log_miss == log_zero ? log_zero : cut * log_miss));
    }
    return cap_log(log_sum_exp(terms));
}

double murmur_latency(std::uint32_t c, double f, double g) {
    const double denom = std::log(2.0 - 2.0 * f) + std::log(g);
    if (!(denom > 0.0)) throw DomainError("latency needs (2 - 2f) G > 1");
    return std::log(double(c)) / denom;
}

double sieve_total_validity_bound(std::uint32_t c, double f, std::uint32_t e, std::uint32_t e_hat,
                                  double log_eps_pb_t) {
    if (e_hat > e) throw DomainError("E_hat exceeds E");
    const double log_o = log_binom_tail(e, f, std::int64_t(e) - e_hat + 1);
    return log_union(log_eps_pb_t, log_any_of(log_o, c));
}

double sieve_poisoned_probability(std::uint32_t c, double f, std::uint32_t e, std::uint32_t e_hat) {
    return log_any_of(log_binom_tail(e, f, e_hat), c);
}

SieveConsistencyDetail sieve_consistency_detail(std::uint32_t c, double f, std::uint32_t e, std::uint32_t e_hat) {
    if (e_hat > e) throw DomainError("E_hat exceeds E");
    if (c == 0) throw DomainError("no correct process");
    SieveConsistencyDetail out;
    out.log_eps_p = sieve_poisoned_probability(c, f, e, e_hat);

    const auto pf = binom_pmf(e, f);
    const std::int64_t ehat = e_hat;
    // Byzantine counts whose prior mass is negligible are skipped and charged
    // as if they always led to a violation. Poisoned counts carry no weight
    // in either mixture.
    constexpr double negligible = 1e-60;
    std::vector<std::uint32_t> counts;
    double omitted = 0.0;
    for (std::uint32_t fbar = 0; fbar <= e && fbar < e_hat; ++fbar) {
        if (pf[fbar] >= negligible)
            counts.push_back(fbar);
        else
            omitted += pf[fbar];
    }
    // P[A^k | F]: a process with F Byzantine slots delivers once k correct
    // processes pb-delivered the message.
    auto delivers = [&](std::uint32_t k, std::uint32_t fbar) {
        return std::exp(log_binom_tail(e - fbar, double(k) / c, ehat - std::int64_t(fbar)));
    };
    auto chernoff = [&](std::uint32_t fbar, double h) {
        return chernoff_union_bound(double(e) - fbar, double(ehat) - double(fbar), h);
    };

    // Second phase.
    out.phi_tilde.assign(c + 1, 0.0);
    std::vector<double> prev(e + 1), cur(e + 1);
    for (auto fbar : counts) prev[fbar] = delivers(0, fbar);
    for (std::uint32_t l = 1; l <= c; ++l) {
        double wp = 0, wm = 0, sp = 0, sm = 0;
        for (auto fbar : counts) {
            cur[fbar] = delivers(l, fbar);
            const double phi = std::exp(chernoff(fbar, double(c - l) / c));
            const double plus = std::max(0.0, cur[fbar] - prev[fbar]) * pf[fbar];
            const double minus = std::max(0.0, 1.0 - prev[fbar]) * pf[fbar];
            wp += plus;
            sp += plus * phi;
            wm += minus;
            sm += minus * phi;
        }
        const double phi_plus = wp > 0 ? std::min(1.0, (sp + omitted) / wp) : 1.0;
        const double phi_minus = wm > 0 ? std::min(1.0, (sm + omitted) / wm) : 1.0;
        const double log_keep = std::log1p(-phi_plus) + double(c - 1) * std::log1p(-phi_minus);
        out.phi_tilde[l] = -std::expm1(log_keep);
        std::swap(prev, cur);
    }

    // First phase: cumulative probability that some process could deliver
    // some message at cost at most L. Poisoned counts deliver at any cost and
    // are accounted for by eps_p.
    auto psi_of = [&](std::uint32_t l) {
        double total = omitted;
        for (auto fbar : counts) {
            const double full = chernoff(fbar, double(l) / c);
            const double rest = chernoff(fbar, double(c % l) / c);
            const double keep = double(c / l) * log1m_exp(full) + log1m_exp(rest);
            total += pf[fbar] * -std::expm1(keep);
        }
        return std::min(1.0, total);
    };
    std::vector<double> big_psi(c + 1);
    big_psi[0] = 0.0;
    for (std::uint32_t l = 1; l <= c; ++l) {
        big_psi[l] = -std::expm1(double(c) * std::log1p(-psi_of(l)));
        // The Chernoff branch is not monotone in L; a cumulative bound is.
        big_psi[l] = std::max(big_psi[l], big_psi[l - 1]);
    }
    out.psi_tilde.assign(c + 1, 0.0);
    for (std::uint32_t l = 1; l < c; ++l) out.psi_tilde[l] = big_psi[l] - big_psi[l - 1];
    out.psi_tilde[c] = 1.0 - big_psi[c - 1];

    double total = std::exp(out.log_eps_p);
    for (std::uint32_t l = 1; l <= c; ++l) total += out.psi_tilde[l] * out.phi_tilde[l];
    out.log_eps_c = total >= 1.0 ? 0.0 : (total <= 0.0 ? log_zero : std::log(total));
    return out;
}

double sieve_consistency_bound(std::uint32_t c, double f, std::uint32_t e, std::uint32_t e_hat) {
    return sieve_consistency_detail(c, f, e, e_hat).log_eps_c;
}

double contagion_validity_bound(std::uint32_t d, std::uint32_t d_hat, double f, double log_eps_pcb_v) {
    if (d_hat > d) throw DomainError("D_hat exceeds D");
    const double log_o = log_binom_tail(d, f, std::int64_t(d) - d_hat + 1);
    return log_union(log_eps_pcb_v, log_o);
}

GameParams consistency_game(std::uint32_t n, std::uint32_t c, std::uint32_t r, std::uint32_t r_hat) {
    return GameParams{n, r, 1.0, 1, n - c, r_hat};
}

GameParams totality_game(std::uint32_t n, std::uint32_t c, std::uint32_t r, std::uint32_t r_hat) {
    return GameParams{c, r, double(c) / n, c, 1, r_hat};
}

double contagion_mu(const GammaDistribution& gamma_plus, std::uint32_t n, std::uint32_t c, std::uint32_t d,
                    std::uint32_t d_hat) {
    const auto& pmf = gamma_plus.rounds.back();
    std::vector<double> terms;
    for (std::uint32_t g = 0; g < pmf.size(); ++g) {
        if (pmf[g] == log_zero) continue;
        const double one = log_binom_tail(d, double(g) / n, d_hat);
        terms.push_back(pmf[g] + log_any_of(one, c));
    }
    return log_add(log_sum_exp(terms), gamma_plus.pruned_mass > 0 ? std::log(gamma_plus.pruned_mass) : log_zero);
}

double contagion_epsilon_b(const RoundVisits& gamma_minus, std::uint32_t n, std::uint32_t c, std::uint32_t d,
                           std::uint32_t d_hat) {
    if (gamma_minus.visits.size() != c + 1) throw DomainError("round visits do not match C");
    // W(g): total probability over rounds 0..C that the round ends with g
    // correct processes ready. Round 0 is the empty start.
    std::vector<double> w = gamma_minus.visits;
    w[0] += 1.0;
    // Pruned mass may be missing from every later round.
    double total = gamma_minus.pruned_mass * c;
    for (std::uint32_t g = 0; g <= c; ++g) {
        if (w[g] == 0.0) continue;
        const double lo = log_binom_tail(d, double(g) / n, d_hat);
        const double hi = log_binom_tail(d, double(g + n - c) / n, d_hat);
        // Neither everyone nor no one can be pushed over D_hat.
        const double alpha = 1.0 - std::exp(double(c) * lo) - std::exp(double(c) * log1m_exp(hi));
        if (alpha > 0.0) total += w[g] * alpha;
    }
    return total >= 1.0 ? 0.0 : (total <= 0.0 ? log_zero : std::log(total));
}

ContagionConsistency contagion_consistency_bound(std::uint32_t n, std::uint32_t c, std::uint32_t r, std::uint32_t r_hat,
                                                 std::uint32_t d, std::uint32_t d_hat, double log_eps_pcb_c) {
    if (r_hat > r || d_hat > d) throw DomainError("threshold exceeds its sample");
    auto gamma = gamma_distribution(consistency_game(n, c, r, r_hat), bound_prune);
    ContagionConsistency out;
    out.log_mu = contagion_mu(gamma, n, c, d, d_hat);
    out.log_eps_c = log_union(log_eps_pcb_c, out.log_mu);
    return out;
}

double contagion_totality_bound(std::uint32_t n, std::uint32_t c, std::uint32_t r, std::uint32_t r_hat,
                                std::uint32_t d, std::uint32_t d_hat, double log_eps_pcb_c, double log_mu) {
    if (r_hat > r || d_hat > d) throw DomainError("threshold exceeds its sample");
    auto visits = round_end_visits(totality_game(n, c, r, r_hat), bound_prune);
    const double log_b = contagion_epsilon_b(visits, n, c, d, d_hat);
    return log_add(log_add(log_eps_pcb_c, log_mu), log_b);
}

ContagionGammas contagion_gammas(std::uint32_t n, std::uint32_t c, std::uint32_t r, std::uint32_t r_hat) {
    return {gamma_distribution(consistency_game(n, c, r, r_hat), bound_prune),
            round_end_visits(totality_game(n, c, r, r_hat), bound_prune)};
}

BoundReport combined_security(std::uint32_t n, double f, const ProtocolParams& params, const ContagionGammas* gammas) {
    params.validate();
    const auto config = make_config(n, f);
    const std::uint32_t c = config.correct_count();
    const double sieve_c = sieve_consistency_bound(c, config.byzantine_fraction(), params.e, params.e_hat);
    if (gammas) return compose_report(n, f, params, sieve_c, *gammas);
    return compose_report(n, f, params, sieve_c, contagion_gammas(n, c, params.r, params.r_hat));
}

BoundReport compose_report(std::uint32_t n, double f, const ProtocolParams& params, double log_sieve_consistency,
                           const ContagionGammas& gammas) {
    params.validate();
    const auto config = make_config(n, f);
    const std::uint32_t c = config.correct_count();
    const double fb = config.byzantine_fraction();
    BoundReport out;
    out.n = n;
    out.c = c;
    out.params = params;
    out.eps_pb_totality = murmur_totality_bound(c, gossip_link_probability(n, params.g));
    out.eps_sieve_validity = sieve_total_validity_bound(c, fb, params.e, params.e_hat, out.eps_pb_totality);
    out.eps_sieve_consistency = log_sieve_consistency;
    out.eps_pcb_consistency = log_union(out.eps_sieve_consistency, out.eps_pb_totality);
    out.eps_contagion_validity = contagion_validity_bound(params.d, params.d_hat, fb, out.eps_sieve_validity);
    out.log_mu = contagion_mu(gammas.plus, n, c, params.d, params.d_hat);
    out.eps_contagion_consistency = log_union(out.eps_pcb_consistency, out.log_mu);
    const double log_b = contagion_epsilon_b(gammas.minus, n, c, params.d, params.d_hat);
    out.eps_contagion_totality = log_add(log_add(out.eps_pcb_consistency, out.log_mu), log_b);

    const double terms[] = {out.eps_contagion_validity, out.eps_contagion_consistency, out.eps_contagion_totality};
    out.eps_combined = cap_log(log_sum_exp(terms));
    try {
        out.latency_estimate = murmur_latency(c, fb, params.g);
    } catch (const DomainError&) {
        out.latency_estimate = std::nan("");
    }
    return out;
}

void write_json(std::ostream& os, const BoundReport& r) {
    auto lg = [](double x) { return std::isfinite(x) ? nlohmann::json(x / std::log(10.0)) : nlohmann::json(nullptr); };
    nlohmann::json j{
        {"params",
         {{"n", r.n},
          {"c", r.c},
          {"G", r.params.g},
          {"E", r.params.e},
          {"E_hat", r.params.e_hat},
          {"R", r.params.r},
          {"R_hat", r.params.r_hat},
          {"D", r.params.d},
          {"D_hat", r.params.d_hat}}},
        {"eps",
         {{"pb_totality", lg(r.eps_pb_totality)},
          {"sieve_validity", lg(r.eps_sieve_validity)},
          {"sieve_consistency", lg(r.eps_sieve_consistency)},
          {"pcb_consistency", lg(r.eps_pcb_consistency)},
          {"contagion_validity", lg(r.eps_contagion_validity)},
          {"contagion_consistency", lg(r.eps_contagion_consistency)},
          {"contagion_totality", lg(r.eps_contagion_totality)},
          {"mu", lg(r.log_mu)},
          {"combined", lg(r.eps_combined)}}},
        {"latency", std::isfinite(r.latency_estimate) ? nlohmann::json(r.latency_estimate) : nlohmann::json(nullptr)}};
    os << j.dump(2) << '\n';
}

}  // namespace pbcast
