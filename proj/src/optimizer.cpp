#include "pbcast/optimizer.hpp"

#include "pbcast/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

namespace pbcast {

namespace {

constexpr double ln2 = 0.69314718055994530942;

double log_sum(std::initializer_list<double> xs) { return log_sum_exp(std::span<const double>(xs.begin(), xs.size())); }

auto params_key(const ProtocolParams& p) { return std::tie(p.g, p.e, p.e_hat, p.r, p.r_hat, p.d, p.d_hat); }

// Memoized component searches for one (N, f). Thresholds are picked per
// component against the terms they influence; sizes are scored on the full
// composition.
class Search {
public:
    Search(std::uint32_t n, double f) : n_(n), f_(f), config_(make_config(n, f)) {
        c_ = config_.correct_count();
        fb_ = config_.byzantine_fraction();
    }

    struct SieveChoice {
        std::uint32_t e_hat = 0;
        double log_consistency = 0;
    };

    struct ContagionChoice {
        std::uint32_t r_hat = 0;
        std::uint32_t d_hat = 0;
        double score = 0;
    };

    const SieveChoice& sieve(std::uint32_t e) {
        if (auto it = sieve_.find(e); it != sieve_.end()) return it->second;
        std::map<std::uint32_t, double> memo;
        auto consistency = [&](std::uint32_t e_hat) {
            auto it = memo.find(e_hat);
            if (it == memo.end()) it = memo.emplace(e_hat, sieve_consistency_bound(c_, fb_, e, e_hat)).first;
            return it->second;
        };
        auto validity = [&](std::uint32_t e_hat) {
            return log1m_exp(double(c_) * log1m_exp(log_binom_tail(e, fb_, std::int64_t(e) - e_hat + 1)));
        };
        // Consistency improves and validity worsens as E_hat grows; find
        // where they cross, then settle on the best neighbour.
        std::uint32_t lo = 0, hi = e;
        while (lo < hi) {
            const std::uint32_t mid = lo + (hi - lo) / 2;
            if (consistency(mid) <= validity(mid))
                hi = mid;
            else
                lo = mid + 1;
        }
        SieveChoice best;
        double best_score = 1.0;
        for (std::uint32_t e_hat = lo > 0 ? lo - 1 : 0; e_hat <= std::min(e, lo + 1); ++e_hat) {
            const double score = log_sum({validity(e_hat), ln2 + consistency(e_hat)});
            if (score < best_score) {
                best_score = score;
                best = {e_hat, consistency(e_hat)};
            }
        }
        return sieve_.emplace(e, best).first->second;
    }

    const ContagionGammas& gammas(std::uint32_t r, std::uint32_t r_hat) {
        auto key = std::make_pair(r, r_hat);
        if (auto it = gammas_.find(key); it != gammas_.end()) return it->second;
        return gammas_.emplace(key, contagion_gammas(n_, c_, r, r_hat)).first->second;
    }

    double contagion_score(std::uint32_t d, std::uint32_t d_hat, const ContagionGammas& g) const {
        const double validity = log_binom_tail(d, fb_, std::int64_t(d) - d_hat + 1);
        const double mu = contagion_mu(g.plus, n_, c_, d, d_hat);
        const double b = contagion_epsilon_b(g.minus, n_, c_, d, d_hat);
        return log_sum({validity, ln2 + mu, b});
    }

    // Best D_hat for a fixed (R, R_hat), subject to R_hat / R < D_hat / D.
    std::pair<std::uint32_t, double> best_d_hat(std::uint32_t r, std::uint32_t r_hat, std::uint32_t d) {
        const auto& g = gammas(r, r_hat);
        const std::uint32_t first = r == 0 ? 0 : std::uint32_t(std::uint64_t(r_hat) * d / r) + 1;
        if (first > d) return {0, std::numeric_limits<double>::infinity()};
        std::map<std::uint32_t, double> memo;
        auto score = [&](std::uint32_t x) {
            auto it = memo.find(x);
            if (it == memo.end()) it = memo.emplace(x, contagion_score(d, x, g)).first;
            return it->second;
        };
        const std::uint32_t span = d - first + 1;
        const std::uint32_t step = span <= 48 ? 1 : (span + 23) / 24;
        std::uint32_t best = first;
        for (std::uint32_t x = first; x <= d; x += step)
            if (score(x) < score(best)) best = x;
        if (step > 1) {
            const std::uint32_t from = best > first + step ? best - step : first;
            const std::uint32_t to = std::min(d, best + step);
            for (std::uint32_t x = from; x <= to; ++x)
                if (score(x) < score(best)) best = x;
        }
        return {best, score(best)};
    }

    const ContagionChoice& contagion(std::uint32_t r, std::uint32_t d) {
        auto key = std::make_pair(r, d);
        if (auto it = contagion_.find(key); it != contagion_.end()) return it->second;
        std::map<std::uint32_t, ContagionChoice> memo;
        auto eval = [&](std::uint32_t r_hat) -> const ContagionChoice& {
            auto it = memo.find(r_hat);
            if (it == memo.end()) {
                auto [d_hat, score] = best_d_hat(r, r_hat, d);
                it = memo.emplace(r_hat, ContagionChoice{r_hat, d_hat, score}).first;
            }
            return it->second;
        };
        auto better = [&](std::uint32_t a, std::uint32_t b) { return eval(a).score < eval(b).score; };
        std::uint32_t step = r <= 12 ? 1 : (r + 9) / 10;
        std::uint32_t best = 0;
        for (std::uint32_t x = 0; x <= r; x += step)
            if (better(x, best)) best = x;
        while (step > 1) {
            step = (step + 1) / 2;
            const std::uint32_t centre = best;
            if (centre >= step && better(centre - step, best)) best = centre - step;
            if (centre + step <= r && better(centre + step, best)) best = centre + step;
        }
        for (std::uint32_t x : {best > 0 ? best - 1 : best, best + 1})
            if (x <= r && better(x, best)) best = x;
        return contagion_.emplace(key, eval(best)).first->second;
    }

    ProtocolParams thresholds(ProtocolParams p) {
        p.e_hat = sieve(p.e).e_hat;
        const auto& cc = contagion(p.r, p.d);
        p.r_hat = cc.r_hat;
        p.d_hat = cc.d_hat;
        return p;
    }

    BoundReport report(const ProtocolParams& p) {
        return compose_report(n_, f_, p, sieve(p.e).e_hat == p.e_hat ? sieve(p.e).log_consistency
                                                                     : sieve_consistency_bound(c_, fb_, p.e, p.e_hat),
                              gammas(p.r, p.r_hat));
    }

private:
    std::uint32_t n_;
    double f_;
    SystemConfig config_;
    std::uint32_t c_ = 0;
    double fb_ = 0;
    std::map<std::uint32_t, SieveChoice> sieve_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, ContagionChoice> contagion_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, ContagionGammas> gammas_;
};

ProtocolParams with_sizes(const std::array<std::uint32_t, 4>& s) {
    ProtocolParams p;
    p.g = s[0];
    p.e = s[1];
    p.r = s[2];
    p.d = s[3];
    return p;
}

// Uncapped sum of the component bounds. It keeps the search moving while the
// combined bound is still capped at one.
double steering(const BoundReport& r) {
    double total = 0;
    for (double x : {r.eps_pb_totality, r.eps_sieve_validity, r.eps_sieve_consistency, r.log_mu,
                     r.eps_contagion_totality, r.eps_contagion_validity})
        total += std::exp(x);
    return total;
}

bool better(const OptimizeResult& a, const OptimizeResult& b) {
    if (a.report.eps_combined != b.report.eps_combined) return a.report.eps_combined < b.report.eps_combined;
    const double sa = steering(a.report), sb = steering(b.report);
    if (sa != sb) return sa < sb;
    return params_key(a.params) < params_key(b.params);
}

}  // namespace

ProtocolParams best_thresholds(std::uint32_t n, double f, ProtocolParams sizes) {
    Search search(n, f);
    return search.thresholds(sizes);
}

OptimizeResult optimize_params(std::uint32_t n, double f, std::uint32_t s, const OptimizeOptions& options) {
    if (s == 0) throw ConfigError("average sample size must be at least 1");
    Search search(n, f);
    std::map<std::array<std::uint32_t, 4>, OptimizeResult> scored;
    auto score = [&](const std::array<std::uint32_t, 4>& sizes) -> const OptimizeResult& {
        if (auto it = scored.find(sizes); it != scored.end()) return it->second;
        OptimizeResult r;
        r.params = search.thresholds(with_sizes(sizes));
        r.report = search.report(r.params);
        return scored.emplace(sizes, r).first->second;
    };

    OptimizeResult best = score({s, s, s, s});
    if (options.mode == SizeMode::free) {
        // Restarts: the equal split, and a split that favours the echo sample,
        // which dominates the bound at large N. Each descent gets half the
        // budget left when it starts.
        const std::uint32_t total = 4 * s;
        std::uint32_t g = std::max(1u, total / 16), r = std::max(1u, total / 16), d = std::max(1u, 3 * total / 16);
        std::vector<std::array<std::uint32_t, 4>> starts{{s, s, s, s}};
        if (total > g + r + d) starts.push_back({g, total - g - r - d, r, d});
        for (std::size_t k = 0; k < starts.size(); ++k) {
            const std::size_t cap = k + 1 == starts.size()
                                        ? options.budget
                                        : scored.size() + (options.budget - std::min<std::size_t>(options.budget, scored.size())) / 2;
            auto current = starts[k];
            OptimizeResult local = score(current);
            std::uint32_t delta = 1;
            while (delta * 2 <= s) delta *= 2;
            while (delta > 0 && scored.size() < cap) {
                bool moved = false;
                for (std::size_t i = 0; i < 4 && !moved; ++i) {
                    for (std::size_t j = 0; j < 4 && !moved; ++j) {
                        if (i == j || current[i] <= delta) continue;
                        auto cand = current;
                        cand[i] -= delta;
                        cand[j] += delta;
                        if (!scored.count(cand) && scored.size() >= cap) break;
                        const auto& r = score(cand);
                        if (better(r, local)) {
                            local = r;
                            current = cand;
                            moved = true;
                        }
                    }
                }
                if (!moved) delta /= 2;
            }
            if (better(local, best)) best = local;
        }
    }
    best.evaluations = static_cast<std::uint32_t>(scored.size());
    return best;
}

std::optional<SweepAxis> axis_from_name(const std::string& s) {
    if (s == "S" || s == "s") return SweepAxis::s;
    if (s == "N" || s == "n") return SweepAxis::n;
    if (s == "f") return SweepAxis::f;
    return std::nullopt;
}

std::vector<SweepRow> sweep(const SweepOptions& options) {
    std::vector<SweepRow> rows;
    for (double v : options.grid) {
        std::uint32_t n = options.n, s = options.s;
        double f = options.f;
        switch (options.axis) {
            case SweepAxis::s: s = static_cast<std::uint32_t>(std::lround(v)); break;
            case SweepAxis::n: n = static_cast<std::uint32_t>(std::lround(v)); break;
            case SweepAxis::f: f = v; break;
        }
        SweepRow row;
        row.axis_value = v;
        row.report = options.fixed ? combined_security(n, f, *options.fixed) : optimize_params(n, f, s, options.optimize).report;
        rows.push_back(row);
    }
    return rows;
}

void write_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    auto lg = [](double x) { return x / std::log(10.0); };
    os << "axis,G,E,E_hat,R,R_hat,D,D_hat,log10_eps_v,log10_eps_c,log10_eps_t,log10_eps\n";
    for (const auto& row : rows) {
        const auto& r = row.report;
        const auto& p = r.params;
        os << row.axis_value << ',' << p.g << ',' << p.e << ',' << p.e_hat << ',' << p.r << ',' << p.r_hat << ','
           << p.d << ',' << p.d_hat << ',' << lg(r.eps_contagion_validity) << ',' << lg(r.eps_contagion_consistency)
           << ',' << lg(r.eps_contagion_totality) << ',' << lg(r.eps_combined) << '\n';
    }
}

}  // namespace pbcast
