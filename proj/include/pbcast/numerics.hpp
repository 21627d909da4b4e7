#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace pbcast {

// Everything here works on natural-log probabilities.
inline constexpr double log_zero = -std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b);
double log_sum_exp(std::span<const double> xs);
// log(1 - e^x) for x <= 0.
double log1m_exp(double x);
// log(e^a - e^b); requires a >= b.
double log_diff_exp(double a, double b);
// Clamp a log-probability to <= 0.
inline double cap_log(double x) { return x > 0.0 ? 0.0 : x; }

double log_choose(std::uint64_t n, std::uint64_t k);

// log P[Bin(n,p) = k].
double log_binom_pmf(std::uint64_t n, double p, std::uint64_t k);
// log P[Bin(n,p) >= k0]. k0 <= 0 gives 0, k0 > n gives log_zero.
double log_binom_tail(std::uint64_t n, double p, std::int64_t k0);
// log P[Bin(n,p) <= k].
double log_binom_cdf(std::uint64_t n, double p, std::int64_t k);
// Whole pmf in linear space, index 0..n.
std::vector<double> binom_pmf(std::uint64_t n, double p);

struct MergeCheck {
    std::vector<double> convolved;  // pmf of X+Y by explicit convolution
    std::vector<double> reference;  // Bin(A, (x+y)/B)
};
// X ~ Bin(A, x/B), Y | X ~ Bin(A-X, y/(B-x)).
MergeCheck binomial_merge_check(std::uint32_t a, std::uint32_t b, std::uint32_t x, std::uint32_t y);

// log of (e*n*h/k)^k * e^(-n*h), or 0 (probability one) when h lies outside
// (k - sqrt(k))/n or k <= 0.
double chernoff_union_bound(double n, double k, double h);

}  // namespace pbcast
