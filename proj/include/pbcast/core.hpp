#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pbcast {

using ProcessId = std::uint32_t;
// Messages are numbered 1..C; 0 never names a message.
using Message = std::uint32_t;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct DomainError : Error {
    using Error::Error;
};
// Raised when an adversary misuses the control surface; the run is void.
struct ExecutionFailure : Error {
    using Error::Error;
};
struct BudgetExceeded : Error {
    using Error::Error;
};

// SplitMix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seedable generator. split() hands out a sub-stream keyed by an entity id,
// so draws made by one entity never depend on the order other entities run.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix64(seed)) {}

    Rng split(std::uint64_t stream) const { return Rng(mix64(seed_ ^ mix64(stream + 0x632be59bd9b4e019ULL))); }

    std::uint64_t seed() const { return seed_; }

    result_type operator()() { return engine_(); }
    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }

    std::uint32_t uniform(std::uint32_t bound) {
        return std::uniform_int_distribution<std::uint32_t>(0, bound - 1)(engine_);
    }
    double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

struct SystemConfig {
    std::uint32_t n = 1;
    double f = 0.0;
    // The Byzantine processes are the highest ids, so 0..C-1 enumerates the
    // correct processes in order.
    std::uint32_t byzantine_count = 0;

    std::uint32_t correct_count() const { return n - byzantine_count; }
    bool is_byzantine(ProcessId p) const { return p >= correct_count(); }
    double byzantine_fraction() const { return n == 0 ? 0.0 : double(byzantine_count) / n; }
};

SystemConfig make_config(std::uint32_t n, double f);

struct ProtocolParams {
    double g = 0;
    std::uint32_t e = 0, e_hat = 0;
    std::uint32_t r = 0, r_hat = 0;
    std::uint32_t d = 0, d_hat = 0;

    // Throws ConfigError when a threshold exceeds its sample or the ready
    // ratio is not below the delivery ratio.
    void validate() const;
    bool operator==(const ProtocolParams&) const = default;
};

// Idealized signature: the tag is a keyed digest only the signing authority
// can mint. Adversary code receives signing rights for Byzantine ids only.
struct SignedPayload {
    ProcessId sender = 0;
    Message message = 0;
    std::uint64_t tag = 0;
    bool operator==(const SignedPayload&) const = default;
};

class Authority {
public:
    explicit Authority(std::uint64_t secret) : secret_(mix64(secret ^ 0x5851f42d4c957f2dULL)) {}
    SignedPayload sign(ProcessId sender, Message m) const { return {sender, m, digest(sender, m)}; }
    bool verify(const SignedPayload& p) const { return p.tag == digest(p.sender, p.message); }
    // Convenience for handlers bound to a designated sender.
    bool verify(ProcessId sender, const SignedPayload& p) const { return p.sender == sender && verify(p); }

private:
    std::uint64_t digest(ProcessId sender, Message m) const {
        return mix64(secret_ ^ mix64((std::uint64_t(sender) << 32) | m));
    }
    std::uint64_t secret_;
};

// `count` independent uniform draws over 0..universe_size-1.
std::vector<ProcessId> sample_with_replacement(std::uint32_t universe_size, std::uint32_t count, Rng& rng);

// k ~ Poisson(mean) truncated at universe_size, then k distinct uniform ids
// (sorted).
std::vector<ProcessId> sample_poisson_distinct(std::uint32_t universe_size, double mean, Rng& rng);

std::string to_string(const ProtocolParams& p);

// Desk-scale parameters used when none are given.
ProtocolParams default_params();

}  // namespace pbcast
