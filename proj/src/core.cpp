#include "pbcast/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pbcast {

SystemConfig make_config(std::uint32_t n, double f) {
    if (n == 0) throw ConfigError("system needs at least one process");
    if (!(f >= 0.0 && f < 1.0)) throw ConfigError("Byzantine fraction must lie in [0,1)");
    SystemConfig c;
    c.n = n;
    c.f = f;
    c.byzantine_count = static_cast<std::uint32_t>(std::floor(f * n + 1e-9));
    if (c.byzantine_count >= n) throw ConfigError("no correct process left");
    return c;
}

void ProtocolParams::validate() const {
    if (!(g >= 0.0)) throw ConfigError("gossip sample size must be non-negative");
    if (e_hat > e) throw ConfigError("echo threshold exceeds echo sample size");
    if (r_hat > r) throw ConfigError("ready threshold exceeds ready sample size");
    if (d_hat > d) throw ConfigError("delivery threshold exceeds delivery sample size");
    // R^/R < D^/D, cross-multiplied to stay in integers.
    if (r > 0 && d > 0 && std::uint64_t(r_hat) * d >= std::uint64_t(d_hat) * r)
        throw ConfigError("ready ratio must be strictly below delivery ratio");
}

std::vector<ProcessId> sample_with_replacement(std::uint32_t universe_size, std::uint32_t count, Rng& rng) {
    if (universe_size == 0) throw ConfigError("invalid universe: empty");
    std::vector<ProcessId> out(count);
    for (auto& x : out) x = rng.uniform(universe_size);
    return out;
}

std::vector<ProcessId> sample_poisson_distinct(std::uint32_t universe_size, double mean, Rng& rng) {
    if (universe_size == 0) throw ConfigError("invalid universe: empty");
    if (!(mean >= 0.0)) throw DomainError("Poisson mean must be non-negative");
    if (mean == 0.0) return {};
    std::uint64_t k = std::poisson_distribution<std::uint64_t>(mean)(rng);
    k = std::min<std::uint64_t>(k, universe_size);
    std::vector<ProcessId> out;
    out.reserve(k);
    if (k * 2 > universe_size) {
        // Dense case: partial Fisher-Yates.
        std::vector<ProcessId> all(universe_size);
        for (std::uint32_t i = 0; i < universe_size; ++i) all[i] = i;
        for (std::uint64_t i = 0; i < k; ++i) {
            auto j = i + rng.uniform(static_cast<std::uint32_t>(universe_size - i));
            std::swap(all[i], all[j]);
            out.push_back(all[i]);
        }
    } else {
        while (out.size() < k) {
            ProcessId p = rng.uniform(universe_size);
            if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string to_string(const ProtocolParams& p) {
    std::ostringstream os;
    os << "G=" << p.g << " E=" << p.e << " E^=" << p.e_hat << " R=" << p.r << " R^=" << p.r_hat << " D=" << p.d
       << " D^=" << p.d_hat;
    return os.str();
}

ProtocolParams default_params() {
    ProtocolParams p;
    p.g = 8;
    p.e = 20;
    p.e_hat = 13;
    p.r = 20;
    p.r_hat = 7;
    p.d = 20;
    p.d_hat = 13;
    return p;
}

}  // namespace pbcast
